fn main() {
    std::process::exit(cvbmc::cli::main());
}
