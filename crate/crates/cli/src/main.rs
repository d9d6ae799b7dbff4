use clap::Parser;

fn main() {
    let cli = ngram_markov_cli::Cli::parse();
    std::process::exit(ngram_markov_cli::run_and_report(cli));
}
