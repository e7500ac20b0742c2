// Print how each prediction error is modulated and which bits it carries.
//
//     cargo run --example code_chart -- 2

use pem_codec::codec::{demodulate, modulate};
use pem_codec::{BitStream, Theta};

fn chart(theta: Theta) -> pem_codec::Result<()> {
    println!("theta={theta}");
    println!("{:>5} {:>5} {:>8} {:>6}", "eps", "bits", "eps_mod", "back");
    let reach = 2 * theta.get() + 1;
    for eps in -reach..=reach {
        let choices: Vec<Vec<bool>> = match eps {
            0 => vec![vec![false], vec![true, false], vec![true, true]],
            e if e.abs() < theta.get() => vec![vec![false], vec![true]],
            _ => vec![vec![]],
        };
        for bits in choices {
            let mut payload = BitStream::from_bits(bits.iter().copied().chain([false, false]));
            let (eps_mod, used) = modulate(eps, &mut payload, theta)?;
            let (back, carried) = demodulate(eps_mod, theta);
            assert_eq!(back, eps);
            assert_eq!(carried, &bits[..used]);
            let shown: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
            println!("{eps:>5} {:>5} {eps_mod:>8} {back:>6}", if shown.is_empty() { "-" } else { &shown });
        }
    }
    Ok(())
}

fn run() -> pem_codec::Result<()> {
    for t in 1..=2 {
        chart(Theta::new(t)?)?;
    }
    Ok(())
}

fn main() -> pem_codec::Result<()> {
    match std::env::args().nth(1) {
        Some(t) => chart(Theta::new(t.parse().unwrap_or(0))?),
        None => run(),
    }
}
