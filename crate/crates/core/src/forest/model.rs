//! Versioned plain-text model file.
//!
//! ```text
//! prelearn-forest v1
//! layout <layout id>
//! features <p>
//! <slot name>                    (p lines)
//! normalizer
//! <mean> <sd> <0|1>              (p lines)
//! forest <n_trees>
//! tree <n_nodes>
//! S <feature> <threshold>        (preorder)
//! L <negatives> <positives>
//! ```
//!
//! Floats are written in shortest round-trip form, so a reloaded model is
//! bit-identical to the saved one.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Forest, Node, Prediction, Tree};
use crate::error::{Error, Result};
use crate::features::Normalizer;
use crate::matrix::Matrix;

pub const MODEL_MAGIC: &str = "prelearn-forest v1";

/// A forest together with the feature layout and the normalization fitted on
/// its training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub layout_id: String,
    pub feature_names: Vec<String>,
    pub normalizer: Normalizer,
    pub forest: Forest,
}

impl TrainedModel {
    pub fn new(layout_id: String, feature_names: Vec<String>, normalizer: Normalizer, forest: Forest) -> Result<Self> {
        let p = feature_names.len();
        for actual in [normalizer.dim(), forest.n_features()] {
            if actual != p {
                return Err(Error::DimensionMismatch { expected: p, actual });
            }
        }
        Ok(TrainedModel {
            layout_id,
            feature_names,
            normalizer,
            forest,
        })
    }

    /// Normalizes a raw feature row, then votes.
    pub fn predict(&self, raw: &[f64]) -> Result<Prediction> {
        self.forest.predict(&self.normalizer.apply(raw)?)
    }

    pub fn predict_batch(&self, raw: &Matrix) -> Result<Vec<Prediction>> {
        raw.iter_rows().map(|r| self.predict(r)).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.write_into(&mut out);
        out
    }

    fn write_into(&self, out: &mut String) {
        use std::fmt::Write as _;
        let _ = writeln!(out, "{MODEL_MAGIC}");
        let _ = writeln!(out, "layout {}", self.layout_id);
        let _ = writeln!(out, "features {}", self.feature_names.len());
        for name in &self.feature_names {
            let _ = writeln!(out, "{name}");
        }
        let _ = writeln!(out, "normalizer");
        for j in 0..self.normalizer.dim() {
            let _ = writeln!(
                out,
                "{:?} {:?} {}",
                self.normalizer.mean[j],
                self.normalizer.sd[j],
                u8::from(self.normalizer.constant[j])
            );
        }
        let _ = writeln!(out, "forest {}", self.forest.trees().len());
        for tree in self.forest.trees() {
            let _ = writeln!(out, "tree {}", tree.nodes().len());
            let mut stack = vec![0usize];
            while let Some(i) = stack.pop() {
                match &tree.nodes()[i] {
                    Node::Leaf { counts } => {
                        let _ = writeln!(out, "L {} {}", counts[0], counts[1]);
                    }
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        let _ = writeln!(out, "S {feature} {threshold:?}");
                        stack.push(*right);
                        stack.push(*left);
                    }
                }
            }
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        w.write_all(self.to_text().as_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// `origin` only labels error messages.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = Lines {
            inner: text.lines().enumerate(),
            origin,
            last: 0,
        };
        let magic = lines.next()?;
        if magic != MODEL_MAGIC {
            return Err(lines.err(format!("expected `{MODEL_MAGIC}`, found `{magic}`")));
        }
        let layout_id = lines.keyed("layout")?.to_string();
        let p: usize = { let v = lines.keyed("features")?; lines.number(v)? };
        let feature_names = (0..p).map(|_| lines.next().map(str::to_string)).collect::<Result<Vec<_>>>()?;
        if lines.next()? != "normalizer" {
            return Err(lines.err("expected `normalizer`"));
        }
        let mut normalizer = Normalizer {
            mean: Vec::with_capacity(p),
            sd: Vec::with_capacity(p),
            constant: Vec::with_capacity(p),
        };
        for _ in 0..p {
            let line = lines.next()?;
            let f: Vec<&str> = line.split(' ').collect();
            if f.len() != 3 {
                return Err(lines.err("normalizer rows are `<mean> <sd> <0|1>`"));
            }
            normalizer.mean.push(lines.number(f[0])?);
            normalizer.sd.push(lines.number(f[1])?);
            normalizer.constant.push(match f[2] {
                "0" => false,
                "1" => true,
                other => return Err(lines.err(format!("bad constant flag `{other}`"))),
            });
        }
        let n_trees: usize = { let v = lines.keyed("forest")?; lines.number(v)? };
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let n_nodes: usize = { let v = lines.keyed("tree")?; lines.number(v)? };
            trees.push(parse_tree(&mut lines, n_nodes, p)?);
        }
        if let Some((i, extra)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
            return Err(Error::parse(origin, i + 1, format!("unexpected trailing line `{extra}`")));
        }
        TrainedModel::new(layout_id, feature_names, normalizer, Forest::from_trees(trees, p)?)
    }
}

struct Lines<'t, 'p, I: Iterator<Item = (usize, &'t str)>> {
    inner: I,
    origin: &'p Path,
    last: usize,
}

impl<'t, I: Iterator<Item = (usize, &'t str)>> Lines<'t, '_, I> {
    fn next(&mut self) -> Result<&'t str> {
        match self.inner.next() {
            Some((i, line)) => {
                self.last = i + 1;
                Ok(line)
            }
            None => Err(Error::parse(self.origin, self.last + 1, "unexpected end of model file")),
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.origin, self.last, msg.into())
    }

    fn keyed(&mut self, key: &str) -> Result<&'t str> {
        let line = self.next()?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| self.err(format!("expected `{key} ...`, found `{line}`")))
    }

    fn number<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("`{s}` is not a valid number")))
    }
}

fn parse_tree<'t, I: Iterator<Item = (usize, &'t str)>>(lines: &mut Lines<'t, '_, I>, n_nodes: usize, p: usize) -> Result<Tree> {
    if n_nodes == 0 {
        return Err(lines.err("a tree needs at least one node"));
    }
    let mut nodes: Vec<Node> = Vec::with_capacity(n_nodes);
    // (parent, is_right) slots awaiting a child, next one on top
    let mut pending: Vec<(usize, bool)> = Vec::new();
    for _ in 0..n_nodes {
        let line = lines.next()?;
        let idx = nodes.len();
        if idx > 0 {
            let Some((parent, is_right)) = pending.pop() else {
                return Err(lines.err("tree has more nodes than its structure allows"));
            };
            if let Node::Split { left, right, .. } = &mut nodes[parent] {
                *(if is_right { right } else { left }) = idx;
            }
        }
        let f: Vec<&str> = line.split(' ').collect();
        match f.as_slice() {
            ["S", feature, threshold] => {
                let feature: usize = lines.number(feature)?;
                let threshold: f64 = lines.number(threshold)?;
                if feature >= p || !threshold.is_finite() {
                    return Err(lines.err("split feature out of range or non-finite threshold"));
                }
                nodes.push(Node::Split {
                    feature,
                    threshold,
                    left: usize::MAX,
                    right: usize::MAX,
                });
                pending.push((idx, true));
                pending.push((idx, false));
            }
            ["L", neg, pos] => nodes.push(Node::Leaf {
                counts: [lines.number(neg)?, lines.number(pos)?],
            }),
            _ => return Err(lines.err(format!("bad node record `{line}`"))),
        }
    }
    if !pending.is_empty() {
        return Err(lines.err("tree ended with unfilled children"));
    }
    Ok(Tree::from_nodes(nodes))
}
