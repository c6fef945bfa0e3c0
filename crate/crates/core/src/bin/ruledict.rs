use std::io::Write;

/// Deeply nested rules are evaluated recursively.
const STACK_SIZE: usize = 256 << 20;

fn main() {
    let outcome = std::thread::Builder::new()
        .stack_size(STACK_SIZE)
        .spawn(|| ruledict::cli::dispatch(std::env::args_os()))
        .expect("spawn worker thread")
        .join()
        .expect("worker thread panicked");
    let _ = std::io::stdout().write_all(outcome.stdout.as_bytes());
    let _ = std::io::stderr().write_all(outcome.stderr.as_bytes());
    std::process::exit(outcome.exit_code);
}
