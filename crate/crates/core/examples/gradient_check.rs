// Compare analytic LSTM gradients with central differences.

use boldfield::nn::lstm::Lstm;
use boldfield::nn::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn loss(cell: &mut Lstm, x: &Tensor, r: &Tensor) -> boldfield::Result<f64> {
    let y = cell.forward(x)?;
    Ok(y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum())
}

/// Largest relative error over the input and weight gradients.
pub fn run_example() -> boldfield::Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cell = Lstm::init(2, 3, true, &mut rng);
    let x = Tensor::from_fn(&[1, 4, 2], |_| rng.gen_range(-1.0..1.0));
    let r = Tensor::from_fn(&[1, 4, 3], |_| rng.gen_range(-1.0..1.0));

    cell.forward(&x)?;
    let dx = cell.backward(&r)?;
    let dw = cell.w_input_grad.clone();

    let h = 1e-5;
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let (mut up, mut down) = (x.clone(), x.clone());
        up.data_mut()[i] += h;
        down.data_mut()[i] -= h;
        let numeric = (loss(&mut cell, &up, &r)? - loss(&mut cell, &down, &r)?) / (2.0 * h);
        worst = worst.max((numeric - dx.data()[i]).abs() / numeric.abs().max(dx.data()[i].abs()).max(1e-12));
    }
    for i in 0..dw.len() {
        let orig = cell.w_input.data()[i];
        cell.w_input.data_mut()[i] = orig + h;
        let up = loss(&mut cell, &x, &r)?;
        cell.w_input.data_mut()[i] = orig - h;
        let down = loss(&mut cell, &x, &r)?;
        cell.w_input.data_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        worst = worst.max((numeric - dw.data()[i]).abs() / numeric.abs().max(dw.data()[i].abs()).max(1e-12));
    }
    println!("worst elementwise relative error {worst:.2e}");
    Ok(worst)
}

#[allow(dead_code)]
fn main() -> boldfield::Result<()> {
    run_example().map(|_| ())
}
