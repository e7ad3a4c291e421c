use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let env_cap = std::env::var(jp_cli::PRECISION_CAP_ENV).ok();
    let out = jp_cli::run(std::env::args_os(), env_cap.as_deref());
    let _ = std::io::stdout().write_all(out.stdout.as_bytes());
    let _ = std::io::stderr().write_all(out.stderr.as_bytes());
    ExitCode::from(out.code as u8)
}
