fn main() {
    let code = xdyn::cli::run(std::env::args_os());
    std::process::exit(code);
}
