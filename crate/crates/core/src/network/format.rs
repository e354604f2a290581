//! JSON network documents.
//!
//! ```json
//! { "sizes": [2, 3, 2],
//!   "layers": [ { "weights": [[1, 0, 2], [0, 1, -1]], "biases": [0, 0, 0] },
//!               { "weights": [1, 0, 0, 1, 1, 1], "biases": [0, 0] } ],
//!   "input_domain": [-1, 1] }
//! ```
//!
//! `weights` is row-major `s_k x s_{k+1}`, either nested or flat.
//! `input_domain` is a single `[lo, hi]` for every input or one pair per input.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DenseLayer, Interval, Network, NetworkError};

#[derive(Deserialize)]
#[serde(untagged)]
enum WeightsDoc {
    Nested(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

#[derive(Deserialize, Serialize)]
#[serde(untagged)]
enum DomainDoc {
    Uniform([f64; 2]),
    PerInput(Vec<[f64; 2]>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDoc {
    weights: WeightsDoc,
    biases: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    sizes: Vec<usize>,
    layers: Vec<LayerDoc>,
    #[serde(default)]
    input_domain: Option<DomainDoc>,
}

#[derive(Serialize)]
struct LayerOut<'a> {
    weights: Vec<&'a [f64]>,
    biases: &'a [f64],
}

#[derive(Serialize)]
struct NetworkOut<'a> {
    sizes: &'a [usize],
    layers: Vec<LayerOut<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    input_domain: Option<DomainDoc>,
}

/// Parses a network document from text.
pub fn parse_network(text: &str) -> Result<Network, NetworkError> {
    // serde_json rejects NaN/inf literals; a few exporters write them anyway.
    let doc: NetworkDoc = match serde_json::from_str(text) {
        Ok(doc) => doc,
        Err(e) => {
            let lower = text.to_ascii_lowercase();
            if lower.contains("nan") || lower.contains("infinity") {
                return Err(NetworkError::NonFinite {
                    layer: 0,
                    what: "entry",
                });
            }
            return Err(NetworkError::Malformed(e.to_string()));
        }
    };
    from_doc(doc)
}

fn from_doc(doc: NetworkDoc) -> Result<Network, NetworkError> {
    let sizes = doc.sizes;
    if sizes.len() < 3 {
        return Err(NetworkError::Malformed(format!(
            "a network needs at least 3 layers, got {}",
            sizes.len()
        )));
    }
    if doc.layers.len() != sizes.len() - 1 {
        return Err(NetworkError::Malformed(format!(
            "{} layer sizes need {} entries in \"layers\", got {}",
            sizes.len(),
            sizes.len() - 1,
            doc.layers.len()
        )));
    }
    let mut layers = Vec::with_capacity(doc.layers.len());
    for (i, layer) in doc.layers.into_iter().enumerate() {
        let k = i + 1;
        let (rows, cols) = (sizes[i], sizes[i + 1]);
        let weights = match layer.weights {
            WeightsDoc::Flat(w) => {
                if w.len() != rows * cols {
                    return Err(NetworkError::ShapeMismatch {
                        layer: k,
                        detail: format!(
                            "expected {} weights ({rows}x{cols}), got {}",
                            rows * cols,
                            w.len()
                        ),
                    });
                }
                w
            }
            WeightsDoc::Nested(m) => {
                let actual_cols = m.first().map_or(0, |r| r.len());
                if m.len() != rows || m.iter().any(|r| r.len() != cols) {
                    return Err(NetworkError::ShapeMismatch {
                        layer: k,
                        detail: format!(
                            "expected {rows}x{cols} weights, got {}x{actual_cols}",
                            m.len()
                        ),
                    });
                }
                m.into_iter().flatten().collect()
            }
        };
        layers.push(DenseLayer::new(rows, cols, weights, layer.biases));
    }
    let domain = doc.input_domain.map(|d| match d {
        DomainDoc::Uniform([lo, hi]) => vec![Interval::new(lo, hi); sizes[0]],
        DomainDoc::PerInput(v) => v
            .into_iter()
            .map(|[lo, hi]| Interval::new(lo, hi))
            .collect(),
    });
    Network::new(sizes, layers, domain)
}

pub fn load_network(path: &Path) -> Result<Network, NetworkError> {
    let mut text = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| NetworkError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    parse_network(&text)
}

/// Writes the network as a JSON document with nested weight rows.
pub fn write_network<W: Write>(net: &Network, mut out: W) -> Result<(), NetworkError> {
    let layers = net
        .layers()
        .iter()
        .map(|l| LayerOut {
            weights: l.weights().chunks(l.outputs()).collect(),
            biases: l.biases(),
        })
        .collect();
    let input_domain = net.input_domain().map(|d| {
        if d.windows(2).all(|w| w[0] == w[1]) {
            DomainDoc::Uniform([d[0].lo, d[0].hi])
        } else {
            DomainDoc::PerInput(d.iter().map(|iv| [iv.lo, iv.hi]).collect())
        }
    });
    let doc = NetworkOut {
        sizes: net.sizes(),
        layers,
        input_domain,
    };
    serde_json::to_writer_pretty(&mut out, &doc)
        .map_err(|e| NetworkError::Malformed(e.to_string()))?;
    out.write_all(b"\n").map_err(|e| NetworkError::Io {
        path: "<writer>".into(),
        message: e.to_string(),
    })
}

pub fn save_network(net: &Network, path: &Path) -> Result<(), NetworkError> {
    let io_err = |e: std::io::Error| NetworkError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = std::io::BufWriter::new(file);
    write_network(net, &mut w)?;
    w.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::small_net;

    const SMALL_NET: &str = r#"{
        "sizes": [2, 3, 3, 2],
        "layers": [
            {"weights": [[4, 0, -1], [1, -2, 1]], "biases": [0, 0, 0]},
            {"weights": [[2, 3, -1], [-7, 6, 4], [1, -5, 9]], "biases": [0, 0, 0]},
            {"weights": [[1, 0], [0, 1], [0, 0]], "biases": [0, 0]}
        ]
    }"#;

    #[test]
    fn parses_small_net_document() {
        let net = parse_network(SMALL_NET).unwrap();
        assert_eq!(net.depth(), 4);
        assert_eq!(net.sizes(), &[2, 3, 3, 2]);
        assert_eq!(net, small_net());
        assert_eq!(net.weight(2, 2, 1), -7.0);
    }

    #[test]
    fn declared_size_mismatch_is_reported_per_layer() {
        let doc = r#"{"sizes": [2, 4, 2],
            "layers": [{"weights": [[4, 0, -1], [1, -2, 1]], "biases": [0, 0, 0, 0]},
                       {"weights": [[1, 0], [0, 1], [0, 0], [0, 0]], "biases": [0, 0]}]}"#;
        match parse_network(doc) {
            Err(NetworkError::ShapeMismatch { layer, .. }) => assert_eq!(layer, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn flat_weights_and_domains() {
        let doc = r#"{"sizes": [2, 1, 1],
            "layers": [{"weights": [1, 2], "biases": [0]}, {"weights": [1], "biases": [0]}],
            "input_domain": [[0, 1], [-2, 2]]}"#;
        let net = parse_network(doc).unwrap();
        assert_eq!(net.input_domain().unwrap()[1], Interval::new(-2.0, 2.0));
        let doc = doc.replace("[[0, 1], [-2, 2]]", "[-1, 1]");
        let net = parse_network(&doc).unwrap();
        assert_eq!(net.input_domain().unwrap(), &[Interval::new(-1.0, 1.0); 2]);
    }

    #[test]
    fn non_finite_and_garbage_are_rejected() {
        let doc = r#"{"sizes": [1, 1, 1], "layers": [{"weights": [NaN], "biases": [0]}, {"weights": [1], "biases": [0]}]}"#;
        assert!(matches!(
            parse_network(doc),
            Err(NetworkError::NonFinite { .. })
        ));
        assert!(matches!(
            parse_network("{"),
            Err(NetworkError::Malformed(_))
        ));
        let big = r#"{"sizes": [1, 1, 1], "layers": [{"weights": [1e400], "biases": [0]}, {"weights": [1], "biases": [0]}]}"#;
        assert!(parse_network(big).is_err());
    }

    #[test]
    fn save_then_load_is_bit_identical() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let net = Network::random(&[3, 5, 4, 2], 1.0, &mut rng)
            .with_input_domain(Some(vec![Interval::new(-1.0, 1.0); 3]))
            .unwrap();
        let mut buf = Vec::new();
        write_network(&net, &mut buf).unwrap();
        let back = parse_network(std::str::from_utf8(&buf).unwrap()).unwrap();
        for (a, b) in net.layers().iter().zip(back.layers()) {
            let bits = |l: &DenseLayer| {
                l.weights()
                    .iter()
                    .chain(l.biases())
                    .map(|w| w.to_bits())
                    .collect::<Vec<_>>()
            };
            assert_eq!(bits(a), bits(b));
        }
        assert_eq!(net.fingerprint(), back.fingerprint());
    }
}
