fn main() {
    std::process::exit(fieldroad::cli::parse_and_dispatch(std::env::args()));
}
