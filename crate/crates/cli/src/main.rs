use clap::Parser;
use negdep_cli::{finish, run, Cli};

fn main() {
    let cli = Cli::parse();
    let code = finish(run(&cli), cli.command.output_path());
    std::process::exit(code);
}
