use friendtrain::datagen::{generate_corpus, WorldConfig};
use friendtrain::models::FeatureSpace;
use friendtrain::train_loop::{run, LoopConfig, Mode};

fn main() {
    let cfg_world = WorldConfig::default();
    let space = FeatureSpace::from_world(&cfg_world);
    let args: Vec<String> = std::env::args().collect();
    let pool_n: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let pre_epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(30);
    let seeds: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(3);
    let mut f_wins_a = 0; let mut f_wins_b = 0; let mut f_beats_base = 0; let mut s_beats_base = 0;
    for seed in 1..=seeds {
        let la = generate_corpus(seed * 1000 + 1, 100, &cfg_world).unwrap();
        let lb = generate_corpus(seed * 1000 + 2, 100, &cfg_world).unwrap();
        let pool = generate_corpus(seed * 1000 + 3, pool_n, &cfg_world).unwrap();
        let da = generate_corpus(seed * 1000 + 4, 300, &cfg_world).unwrap();
        let db = generate_corpus(seed * 1000 + 5, 300, &cfg_world).unwrap();
        let mut finals = vec![];
        for mode in [Mode::Friend, Mode::SelfTrain] {
            let mut lc = LoopConfig { mode, pretrain_epochs: pre_epochs, ..LoopConfig::default() };
            if mode == Mode::SelfTrain { lc.selector.alpha = 1.0; lc.selector.beta = 1.0; }
            let out = run(&la, &lb, &pool, &da, &db, space, &lc, seed).unwrap();
            let last = out.reports.last().unwrap();
            println!("seed {seed} {:>10}: pre f1={:.3} em={:.3} final f1={:.3} em={:.3} | sel_a={} erra={:.2} sel_b={} errb={:.2}",
                mode.as_str(), out.pretrain_dev_a.f1, out.pretrain_dev_b.em,
                last.dev_a.f1, last.dev_b.em,
                last.selected_count_a, last.oracle_pseudo_error_a,
                last.selected_count_b, last.oracle_pseudo_error_b);
            finals.push((out.pretrain_dev_a.f1, out.pretrain_dev_b.em, last.dev_a.f1, last.dev_b.em));
        }
        let (f, s) = (finals[0], finals[1]);
        if f.2 >= s.2 { f_wins_a += 1; }
        if f.3 >= s.3 { f_wins_b += 1; }
        if f.2 > f.0 && f.3 > f.1 { f_beats_base += 1; }
        if s.2 > s.0 && s.3 > s.1 { s_beats_base += 1; }
    }
    println!("friend>=self: f1 {f_wins_a}/{seeds} em {f_wins_b}/{seeds}; friend>base {f_beats_base}/{seeds}; self>base {s_beats_base}/{seeds}");
}
