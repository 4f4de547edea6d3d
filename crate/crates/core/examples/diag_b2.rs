use friendtrain::data::Flattened;
use friendtrain::datagen::{generate_corpus, WorldConfig};
use friendtrain::models::{
    derive_rewrite_targets, predict_b, task_b_distributions, train_b_epochs, FeatureSpace,
    LinearModel, SeqTargets, TaskKind, TrainConfig,
};
use friendtrain::Instance;

fn main() {
    let world = WorldConfig::default();
    let space = FeatureSpace::from_world(&world);
    let lb = generate_corpus(2002, 100, &world).unwrap();
    let db = generate_corpus(2005, 500, &world).unwrap();
    let targets: Vec<(&Instance, SeqTargets)> = lb
        .iter()
        .map(|i| (i, derive_rewrite_targets(i, i.gold_b.as_ref().unwrap()).unwrap()))
        .collect();
    // How many labeled slot-0 (left-none) insertion targets exist?
    let mut slot0_inserts = 0;
    let mut slot0_tot = 0;
    for (i, t) in &targets {
        let first_tok = i.last_utterance().tokens.get(0).unwrap();
        if first_tok.starts_with('v') {
            slot0_tot += 1;
            if t.insert[0].is_some() {
                slot0_inserts += 1;
            }
        }
    }
    println!("labeled: predicate-at-0 instances: {slot0_tot}, with slot0 insert: {slot0_inserts}");
    let cfg = TrainConfig { epochs_per_iteration: 12, ..TrainConfig::default() };
    let (model, _) =
        train_b_epochs(LinearModel::zeros(TaskKind::B, space), &targets, &[], &cfg, 7).unwrap();

    for inst in &db {
        let gold = derive_rewrite_targets(inst, inst.gold_b.as_ref().unwrap()).unwrap();
        let pred = predict_b(&model, inst).unwrap();
        let flat = Flattened::new(inst);
        if let (Some(gs), Some(ps)) = (gold.insert[0], pred.insertions[0]) {
            if gs != ps && inst.last_utterance().tokens.get(0).unwrap().starts_with('v') {
                let d = task_b_distributions(&model, inst).unwrap();
                println!("dialogue: {:?}", flat.tokens().collect::<Vec<_>>());
                println!("last: {:?} gold ins {:?} pred ins {:?}", inst.last_utterance().tokens.tokens(), gs, ps);
                let show = |name: &str, dist: &Vec<f64>| {
                    let mut idx: Vec<usize> = (0..dist.len()).collect();
                    idx.sort_by(|&a, &b| dist[b].partial_cmp(&dist[a]).unwrap());
                    print!("{name}: ");
                    for &i in idx.iter().take(4) {
                        print!("[{} {} p={:.3}] ", i, flat.token(i), dist[i]);
                    }
                    println!();
                };
                show("start", &d.start[0]);
                show("end", &d.end[0]);
                break;
            }
        }
    }
}
