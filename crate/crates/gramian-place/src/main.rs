use gramian_place::cli;

fn main() {
    // Optional worker cap; silently keeps the default pool on bad values so
    // a stray environment variable never turns into a hard failure.
    if let Ok(text) = std::env::var("GRAMIAN_PLACE_THREADS") {
        if let Ok(threads) = text.trim().parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
    std::process::exit(cli::run(std::env::args()));
}
