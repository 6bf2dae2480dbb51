fn main() {
    std::process::exit(stancegraph::cli::dispatch(std::env::args_os()));
}
