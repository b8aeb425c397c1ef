fn main() {
    std::process::exit(aev_range::cli::run(std::env::args_os()));
}
