//! Plain-text network checkpoints.
//!
//! ```text
//! codesign-network v1
//! layers <count>
//! layer <fan_in> <fan_out> <relu|tanh|linear>
//! <fan_in lines of fan_out weights, row-major>
//! <one line of fan_out biases>
//! ...
//! ```
//!
//! Values are written with Rust's shortest round-trip float formatting, so a
//! checkpoint reloads bit-exactly.

use std::io::{BufRead, Write};

use ndarray::{Array1, Array2};

use super::{Activation, Dense, Network};
use crate::error::{Error, Result};

const MAGIC: &str = "codesign-network v1";

pub fn write_checkpoint<W: Write>(net: &Network, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "layers {}", net.layers().len())?;
    for layer in net.layers() {
        writeln!(
            out,
            "layer {} {} {}",
            layer.fan_in(),
            layer.fan_out(),
            layer.activation.name()
        )?;
        for row in layer.weights.rows() {
            write_row(&mut out, row.iter())?;
        }
        write_row(&mut out, layer.bias.iter())?;
    }
    Ok(())
}

fn write_row<'a, W: Write>(out: &mut W, values: impl Iterator<Item = &'a f64>) -> std::io::Result<()> {
    let line: Vec<String> = values.map(|v| format!("{v:?}")).collect();
    writeln!(out, "{}", line.join(" "))
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

pub fn read_checkpoint<R: BufRead>(input: R) -> Result<Network> {
    let mut lines = input.lines();
    let mut next = |what: &str| -> Result<String> {
        match lines.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(bad(format!("reading {what}: {e}"))),
            None => Err(bad(format!("unexpected end of file, expected {what}"))),
        }
    };
    if next("header")?.trim() != MAGIC {
        return Err(bad("missing header"));
    }
    let count_line = next("layer count")?;
    let count: usize = count_line
        .strip_prefix("layers ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| bad(format!("bad layer count line {count_line:?}")))?;

    let parse_row = |line: &str, width: usize| -> Result<Vec<f64>> {
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| bad(format!("bad number {t:?}"))))
            .collect::<Result<_>>()?;
        if vals.len() != width {
            return Err(bad(format!("expected {width} values, got {}", vals.len())));
        }
        Ok(vals)
    };

    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let head = next("layer header")?;
        let parts: Vec<&str> = head.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "layer" {
            return Err(bad(format!("bad layer header {head:?}")));
        }
        let fan_in: usize = parts[1].parse().map_err(|_| bad("bad fan_in"))?;
        let fan_out: usize = parts[2].parse().map_err(|_| bad("bad fan_out"))?;
        let activation = Activation::from_name(parts[3])
            .ok_or_else(|| bad(format!("unknown activation {:?}", parts[3])))?;
        let mut flat = Vec::with_capacity(fan_in * fan_out);
        for _ in 0..fan_in {
            flat.extend(parse_row(&next("weights")?, fan_out)?);
        }
        let bias = parse_row(&next("bias")?, fan_out)?;
        layers.push(Dense {
            weights: Array2::from_shape_vec((fan_in, fan_out), flat).expect("shape checked"),
            bias: Array1::from(bias),
            activation,
        });
    }
    Network::from_layers(layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn checkpoint_roundtrip_is_exact(seed in any::<u64>(), hidden in 1usize..6, inputs in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let net = Network::new(&[inputs, hidden, 2], Activation::Relu, Activation::Tanh, &mut rng);
            let mut buf = Vec::new();
            write_checkpoint(&net, &mut buf).unwrap();
            let back = read_checkpoint(buf.as_slice()).unwrap();
            prop_assert_eq!(back, net);
        }
    }

    #[test]
    fn truncated_checkpoint_is_rejected() {
        let text = "codesign-network v1\nlayers 1\nlayer 2 1 linear\n0.5\n";
        assert!(matches!(read_checkpoint(text.as_bytes()), Err(Error::Checkpoint(_))));
    }
}
