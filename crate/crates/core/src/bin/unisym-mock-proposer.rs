//! Answers one proposer request on stdin with the enumerative proposer's top
//! `k` labels on stdout. Stands in for the neural service in subprocess mode.

use unisym_core::proposer::mock::serve_once;
use unisym_core::proposer::protocol::{Request, Response, Sequence};
use unisym_core::proposer::EnumProposer;

fn answer(req: &Request) -> Response {
    let labels = EnumProposer::default().labels(req.d as usize);
    let seqs = labels
        .into_iter()
        .take(req.k as usize)
        .enumerate()
        .map(|(i, (l, _))| Sequence { score: -(i as f64), tokens: l.tokens.iter().map(|&t| t as i32).collect() })
        .collect();
    Response::Ok(seqs)
}

fn main() {
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    if let Err(e) = serve_once(&mut stdin.lock(), &mut stdout.lock(), &answer) {
        eprintln!("unisym-mock-proposer: {e}");
        std::process::exit(1);
    }
}
