use std::io::Write;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (code, out, err) = scn_cli::run(std::env::args_os());
    std::io::stdout().write_all(&out).ok();
    std::io::stderr().write_all(&err).ok();
    std::process::exit(code);
}
