fn main() {
    std::process::exit(conformal_efficiency::cli::run(std::env::args_os()));
}
