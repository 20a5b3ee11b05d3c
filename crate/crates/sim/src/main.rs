use clap::Parser;
use segstokes_sim::cli::{resolve, Cli};
use segstokes_sim::run::run;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let (experiment, flags) = Cli::parse().command.split();
    let outcome = resolve(experiment, &flags).and_then(|plan| {
        let dir = plan.common().out.clone();
        run(&plan).map(|_| dir)
    });
    match outcome {
        Ok(dir) => println!("{} finished; outputs in {}", experiment.name(), dir.display()),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
