use std::io::Write;

fn main() {
    let outcome = theta_expansions::cli::execute(std::env::args_os());
    std::io::stdout().write_all(&outcome.stdout).expect("stdout");
    eprint!("{}", outcome.stderr);
    std::process::exit(outcome.code);
}
