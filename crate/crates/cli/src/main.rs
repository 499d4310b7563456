use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    // First Ctrl-C finishes the current input cleanly so state and exports
    // are still written; a second one exits immediately.
    let stop = Arc::new(AtomicBool::new(false));
    let flag = stop.clone();
    if let Err(e) = ctrlc::set_handler(move || {
        if flag.swap(true, Ordering::SeqCst) {
            std::process::exit(130);
        }
    }) {
        log::warn!("cannot install Ctrl-C handler: {e}");
    }

    std::process::exit(lenma_cli::run(std::env::args_os(), &stop));
}
