fn main() {
    let seed = std::env::var(turboce::cli::SEED_ENV).ok();
    std::process::exit(turboce::cli::run(std::env::args_os(), seed));
}
