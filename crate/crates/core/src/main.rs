fn main() {
    std::process::exit(spectral_dp::cli::run(std::env::args_os()));
}
