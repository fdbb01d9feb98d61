use clap::Parser;
use forecal_cli::args::Cli;

/// Joins the error chain, skipping causes the previous message already quotes.
fn describe(err: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !msg.ends_with(&text) {
            if !msg.is_empty() {
                msg.push_str(": ");
            }
            msg.push_str(&text);
        }
    }
    msg
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = forecal_cli::run(cli) {
        eprintln!("error: {}", describe(&err));
        std::process::exit(forecal_cli::exit_code(&err));
    }
}
