use friendtrain::datagen::{generate_corpus, WorldConfig};
use friendtrain::models::{
    derive_rewrite_targets, train_b_epochs, FeatureSpace, LinearModel, SeqTargets, TaskKind,
    TrainConfig,
};
use friendtrain::Instance;

fn main() {
    let world = WorldConfig::default();
    let space = FeatureSpace::from_world(&world);
    let lb = generate_corpus(2002, 100, &world).unwrap();
    let targets: Vec<(&Instance, SeqTargets)> = lb
        .iter()
        .map(|i| (i, derive_rewrite_targets(i, i.gold_b.as_ref().unwrap()).unwrap()))
        .collect();
    let cfg = TrainConfig { epochs_per_iteration: 12, ..TrainConfig::default() };
    let (model, _) =
        train_b_epochs(LinearModel::zeros(TaskKind::B, space), &targets, &[], &cfg, 7).unwrap();

    let v = space.vocab_size();
    let span_block = 32;
    let names = [
        "cls-entity", "cls-pred", "cls-prn", "cls-other",
        "abs0","abs1","abs2","abs3","abs4","abs5","abs6","abs7+",
        "d-4","d-3","d-2","d-1","d0","d1","d2","d3","d4","d5","d6","d7","d8","d9","d10","d11+",
        "in-last","next-pred","prev-pred","latest-ctx",
    ];
    for ty in [7usize, 11, 3] {
        println!("--- slot type {ty} ---");
        for row in [2usize, 3] {
            let base = v + ty * span_block;
            print!("{}: ", if row == 2 { "START" } else { "END  " });
            for (k, name) in names.iter().enumerate() {
                let w = model.weights[row * model.dim + base + k];
                if w.abs() > 0.3 {
                    print!("{name}={w:+.2} ");
                }
            }
            println!();
        }
    }
}
