//! Command-line entry point; see [`phigamma::cli`].

fn main() {
    std::process::exit(phigamma::cli::main_with_args(std::env::args_os()));
}
