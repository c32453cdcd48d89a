use ebsp_cli::acceptance::{run, Settings, TITLES};

fn main() {
    let settings = Settings::default();
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for id in 1..=TITLES.len() {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let outcome = run(id, &settings);
        println!("{}", outcome.line());
        for f in outcome.failures.iter().take(5) {
            println!("       {f}");
        }
        failed += !outcome.passed as usize;
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
