use friendtrain::datagen::{generate_corpus, WorldConfig};
use friendtrain::models::FeatureSpace;
use friendtrain::train_loop::{run, LoopConfig, Mode, RetrainPolicy};

fn main() {
    let cfg_world = WorldConfig::default();
    let space = FeatureSpace::from_world(&cfg_world);
    let args: Vec<String> = std::env::args().collect();
    let pre: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(30);
    let policy = if args.get(2).map(|s| s == "reinit").unwrap_or(false) {
        RetrainPolicy::Reinit } else { RetrainPolicy::Continue };
    let seed = 2u64;
    let la = generate_corpus(seed * 1000 + 1, 100, &cfg_world).unwrap();
    let lb = generate_corpus(seed * 1000 + 2, 100, &cfg_world).unwrap();
    let pool = generate_corpus(seed * 1000 + 3, 2000, &cfg_world).unwrap();
    let da = generate_corpus(seed * 1000 + 4, 300, &cfg_world).unwrap();
    let db = generate_corpus(seed * 1000 + 5, 300, &cfg_world).unwrap();
    let lc = LoopConfig { mode: Mode::Friend, pretrain_epochs: pre, retrain_policy: policy, ..LoopConfig::default() };
    let out = run(&la, &lb, &pool, &da, &db, space, &lc, seed).unwrap();
    println!("pre: P={:.3} R={:.3} F1={:.3} | wer={:.3} rl={:.3} em={:.3}",
        out.pretrain_dev_a.precision, out.pretrain_dev_a.recall, out.pretrain_dev_a.f1,
        out.pretrain_dev_b.wer, out.pretrain_dev_b.rouge_l, out.pretrain_dev_b.em);
    for r in &out.reports {
        println!("it{}: P={:.3} R={:.3} F1={:.3} | wer={:.3} rl={:.3} em={:.3} | selA={} errA={:.3} poolA={:.3} selB={} errB={:.3} poolB={:.3}",
            r.iteration, r.dev_a.precision, r.dev_a.recall, r.dev_a.f1,
            r.dev_b.wer, r.dev_b.rouge_l, r.dev_b.em,
            r.selected_count_a, r.oracle_pseudo_error_a, r.oracle_pool_error_a,
            r.selected_count_b, r.oracle_pseudo_error_b, r.oracle_pool_error_b);
    }
}
