fn main() {
    let code = hetgof_cli::main_with_args(std::env::args_os().collect(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
