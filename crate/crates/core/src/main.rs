use std::io::Write;

fn main() {
    let outcome = precorr::cli::main_with_args(std::env::args_os());
    print!("{}", outcome.stdout);
    let _ = std::io::stdout().flush();
    eprint!("{}", outcome.stderr);
    std::process::exit(outcome.exit_code);
}
