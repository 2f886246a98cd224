use std::io::Write;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let env = std::env::var(rdp_cli::FUEL_ENV).ok();
    let out = rdp_cli::run(&args, env.as_deref());
    // A closed pipe is not an error worth reporting.
    let _ = if out.code == rdp_cli::EXIT_INPUT {
        writeln!(std::io::stderr(), "{}", out.output.trim_end())
    } else {
        writeln!(std::io::stdout(), "{}", out.output.trim_end())
    };
    std::process::exit(out.code);
}
