use clap::Parser;

fn main() {
    let cli = match kdr_cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { kdr_cli::EXIT_USAGE } else { kdr_cli::EXIT_OK };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(kdr_cli::run(cli));
}
