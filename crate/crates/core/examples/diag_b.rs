use friendtrain::data::Flattened;
use friendtrain::datagen::{generate_corpus, WorldConfig};
use friendtrain::models::{
    derive_rewrite_targets, predict_b, train_b_epochs, FeatureSpace, LinearModel, SeqTargets,
    TaskKind, TrainConfig,
};
use friendtrain::Instance;

fn main() {
    let world = WorldConfig::default();
    let space = FeatureSpace::from_world(&world);
    let epochs: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(12);
    let lb = generate_corpus(2002, 100, &world).unwrap();
    let db = generate_corpus(2005, 500, &world).unwrap();
    let targets: Vec<(&Instance, SeqTargets)> = lb
        .iter()
        .map(|i| (i, derive_rewrite_targets(i, i.gold_b.as_ref().unwrap()).unwrap()))
        .collect();
    let cfg = TrainConfig { epochs_per_iteration: epochs, ..TrainConfig::default() };
    let (model, _) =
        train_b_epochs(LinearModel::zeros(TaskKind::B, space), &targets, &[], &cfg, 7).unwrap();

    let (mut keep_err, mut missing, mut spurious, mut wrong_span, mut em, mut n) =
        (0usize, 0usize, 0usize, 0usize, 0usize, 0usize);
    for inst in &db {
        let gold = derive_rewrite_targets(inst, inst.gold_b.as_ref().unwrap()).unwrap();
        let pred = predict_b(&model, inst).unwrap();
        let flat = Flattened::new(inst);
        n += 1;
        if &pred.rewrite == inst.gold_b.as_ref().unwrap() {
            em += 1;
        }
        for (k, g) in gold.keep.iter().enumerate() {
            if pred.keep[k] != *g {
                keep_err += 1;
            }
        }
        for (slot, (g, p)) in gold.insert.iter().zip(&pred.insertions).enumerate() {
            match (g, p) {
                (None, Some(_)) => {
                    spurious += 1;
                    let slot_tok = if flat.last_start() + slot < flat.total() {
                        flat.token(flat.last_start() + slot).to_string()
                    } else {
                        "<end>".into()
                    };
                    if spurious <= 8 {
                        eprintln!("spurious @{} tok={} in {:?} -> ins {:?}", slot, slot_tok,
                            inst.last_utterance().tokens.tokens(), p);
                    }
                }
                (Some(_), None) => missing += 1,
                (Some(gs), Some(ps)) => {
                    // content comparison
                    let gt: Vec<&str> = (gs.0..=gs.1).map(|x| flat.token(x)).collect();
                    let pt: Vec<&str> = (ps.0..=ps.1).map(|x| flat.token(x)).collect();
                    if gt != pt {
                        wrong_span += 1;
                        if wrong_span <= 8 {
                            eprintln!("wrongspan @{} want {:?} got {:?} last={:?}", slot, gt, pt,
                                inst.last_utterance().tokens.tokens());
                        }
                    }
                }
                (None, None) => {}
            }
        }
    }
    println!("n={n} em={} keep_err={keep_err} missing={missing} spurious={spurious} wrong_span={wrong_span}", em as f64 / n as f64);
}
