use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::dataset::Hub;
use crate::stats::rng;
use crate::{Error, Result};

const FORMAT_HEADER: &str = "arrhythmia-risk network v1";

/// Logistic sigmoid, clamped so the result is strictly inside (0, 1).
pub fn sigmoid(u: f64) -> f64 {
    let s = 1.0 / (1.0 + (-u).exp());
    s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// One hub's subnetwork inside an ad hoc network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubnetSpec {
    pub hub: Hub,
    pub n_inputs: usize,
    /// 0 means the subnetwork is a single sigmoid neuron on its inputs.
    pub n_hidden: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NetworkSpec {
    /// Inputs, optional hidden layer, one output neuron.
    Conventional { n_inputs: usize, n_hidden: usize },
    /// One subnetwork per hub whose outputs feed a single output neuron.
    /// Inputs are the hub blocks concatenated in subnet order.
    Adhoc { subnets: Vec<SubnetSpec> },
}

/// Parameters of a single-output block: `n_hidden` neurons of
/// `[weights.., bias]`, then the output neuron `[weights.., bias]`.
fn block_len(n_inputs: usize, n_hidden: usize) -> usize {
    if n_hidden == 0 {
        n_inputs + 1
    } else {
        n_hidden * (n_inputs + 1) + n_hidden + 1
    }
}

fn block_decay_mask(n_inputs: usize, n_hidden: usize, mask: &mut Vec<bool>) {
    let neuron = |fan_in: usize, mask: &mut Vec<bool>| {
        mask.extend(std::iter::repeat_n(true, fan_in));
        mask.push(false);
    };
    if n_hidden == 0 {
        neuron(n_inputs, mask);
    } else {
        for _ in 0..n_hidden {
            neuron(n_inputs, mask);
        }
        neuron(n_hidden, mask);
    }
}

impl NetworkSpec {
    pub fn n_inputs(&self) -> usize {
        match self {
            NetworkSpec::Conventional { n_inputs, .. } => *n_inputs,
            NetworkSpec::Adhoc { subnets } => subnets.iter().map(|s| s.n_inputs).sum(),
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            NetworkSpec::Conventional { n_inputs, n_hidden } => block_len(*n_inputs, *n_hidden),
            NetworkSpec::Adhoc { subnets } => {
                subnets
                    .iter()
                    .map(|s| block_len(s.n_inputs, s.n_hidden))
                    .sum::<usize>()
                    + subnets.len()
                    + 1
            }
        }
    }

    /// `true` for weights (decayed), `false` for biases.
    pub fn decay_mask(&self) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.n_params());
        match self {
            NetworkSpec::Conventional { n_inputs, n_hidden } => {
                block_decay_mask(*n_inputs, *n_hidden, &mut mask)
            }
            NetworkSpec::Adhoc { subnets } => {
                for s in subnets {
                    block_decay_mask(s.n_inputs, s.n_hidden, &mut mask);
                }
                mask.extend(std::iter::repeat_n(true, subnets.len()));
                mask.push(false);
            }
        }
        mask
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NetworkSpec::Conventional { n_inputs, .. } if *n_inputs == 0 => {
                Err(Error::Config("network needs at least one input".into()))
            }
            NetworkSpec::Adhoc { subnets } if subnets.is_empty() => Err(Error::Config(
                "ad hoc network needs at least one subnetwork".into(),
            )),
            NetworkSpec::Adhoc { subnets } => {
                if subnets.iter().any(|s| s.n_inputs == 0) {
                    return Err(Error::Config(
                        "every ad hoc subnetwork needs at least one input".into(),
                    ));
                }
                for (i, a) in subnets.iter().enumerate() {
                    if subnets[..i].iter().any(|b| b.hub == a.hub) {
                        return Err(Error::Config(format!("hub {} appears twice", a.hub)));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Total number of hidden neurons.
    pub fn n_hidden(&self) -> usize {
        match self {
            NetworkSpec::Conventional { n_hidden, .. } => *n_hidden,
            NetworkSpec::Adhoc { subnets } => subnets.iter().map(|s| s.n_hidden).sum(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            NetworkSpec::Conventional { n_inputs, n_hidden } => {
                format!("conventional {n_inputs} inputs, {n_hidden} hidden")
            }
            NetworkSpec::Adhoc { subnets } => {
                let parts: Vec<String> = subnets
                    .iter()
                    .map(|s| format!("{} {}x{}", s.hub, s.n_inputs, s.n_hidden))
                    .collect();
                format!("ad hoc [{}]", parts.join(", "))
            }
        }
    }
}

/// A sigmoid network: its topology and a flat parameter vector in
/// declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    spec: NetworkSpec,
    params: Vec<f64>,
}

impl Network {
    pub fn new(spec: NetworkSpec, params: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if params.len() != spec.n_params() {
            return Err(Error::Dimension {
                expected: spec.n_params(),
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged("non-finite network parameter".into()));
        }
        Ok(Network { spec, params })
    }

    pub fn zeros(spec: NetworkSpec) -> Result<Self> {
        let n = spec.n_params();
        Self::new(spec, vec![0.0; n])
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Probability estimate for one input vector.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        let expected = self.spec.n_inputs();
        if x.len() != expected {
            return Err(Error::Dimension {
                expected,
                got: x.len(),
            });
        }
        Ok(forward_params(
            &self.spec,
            &self.params,
            x,
            &mut Workspace::new(&self.spec),
        ))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{FORMAT_HEADER}");
        match &self.spec {
            NetworkSpec::Conventional { n_inputs, n_hidden } => {
                let _ = writeln!(out, "topology conventional {n_inputs} {n_hidden}");
            }
            NetworkSpec::Adhoc { subnets } => {
                let _ = writeln!(out, "topology adhoc {}", subnets.len());
                for s in subnets {
                    let _ = writeln!(out, "subnet {} {} {}", s.hub, s.n_inputs, s.n_hidden);
                }
            }
        }
        let _ = writeln!(out, "params {}", self.params.len());
        for p in &self.params {
            let _ = writeln!(out, "{p}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let err = |line: usize, msg: &str| Error::format("network", Some(line), msg);
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        match lines.next() {
            Some((_, FORMAT_HEADER)) => {}
            _ => return Err(err(1, "missing network header")),
        }
        let (ln, topo) = lines.next().ok_or_else(|| err(2, "missing topology"))?;
        let fields: Vec<&str> = topo.split_whitespace().collect();
        let num = |s: &str, line: usize| s.parse::<usize>().map_err(|_| err(line, "bad integer"));
        let spec = match fields.as_slice() {
            ["topology", "conventional", i, h] => NetworkSpec::Conventional {
                n_inputs: num(i, ln)?,
                n_hidden: num(h, ln)?,
            },
            ["topology", "adhoc", n] => {
                let n = num(n, ln)?;
                let mut subnets = Vec::with_capacity(n);
                for _ in 0..n {
                    let (ln, line) = lines.next().ok_or_else(|| err(ln, "missing subnet line"))?;
                    match line.split_whitespace().collect::<Vec<_>>().as_slice() {
                        ["subnet", hub, i, h] => subnets.push(SubnetSpec {
                            hub: hub.parse().map_err(|_| err(ln, "bad hub"))?,
                            n_inputs: num(i, ln)?,
                            n_hidden: num(h, ln)?,
                        }),
                        _ => return Err(err(ln, "expected `subnet <HUB> <inputs> <hidden>`")),
                    }
                }
                NetworkSpec::Adhoc { subnets }
            }
            _ => return Err(err(ln, "unrecognized topology")),
        };
        let (ln, count) = lines.next().ok_or_else(|| err(ln, "missing params line"))?;
        let count = match count.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["params", n] => num(n, ln)?,
            _ => return Err(err(ln, "expected `params <count>`")),
        };
        let mut params = Vec::with_capacity(count);
        for (ln, line) in lines.filter(|(_, l)| !l.is_empty()) {
            params.push(
                line.parse::<f64>()
                    .map_err(|_| err(ln, "bad parameter value"))?,
            );
        }
        if params.len() != count {
            return Err(Error::format(
                "network",
                None,
                format!("declared {count} parameters, found {}", params.len()),
            ));
        }
        Network::new(spec, params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

/// Parameters drawn uniformly in `[-scale, scale]`.
pub fn init_network(spec: &NetworkSpec, scale: f64, seed: u64) -> Result<Network> {
    spec.validate()?;
    let mut g = rng(seed);
    let params = (0..spec.n_params())
        .map(|_| {
            if scale > 0.0 {
                g.random_range(-scale..=scale)
            } else {
                0.0
            }
        })
        .collect();
    Network::new(spec.clone(), params)
}

/// Scratch space for hidden activations.
pub(crate) struct Workspace {
    hidden: Vec<f64>,
    sub_out: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(spec: &NetworkSpec) -> Self {
        let n_sub = match spec {
            NetworkSpec::Conventional { .. } => 0,
            NetworkSpec::Adhoc { subnets } => subnets.len(),
        };
        Workspace {
            hidden: vec![0.0; spec.n_hidden()],
            sub_out: vec![0.0; n_sub],
        }
    }
}

fn block_forward(p: &[f64], n_in: usize, n_hidden: usize, x: &[f64], hidden: &mut [f64]) -> f64 {
    if n_hidden == 0 {
        let u: f64 = p[..n_in].iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + p[n_in];
        return sigmoid(u);
    }
    let stride = n_in + 1;
    for (h, out) in hidden.iter_mut().enumerate() {
        let w = &p[h * stride..(h + 1) * stride];
        let u: f64 = w[..n_in].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[n_in];
        *out = sigmoid(u);
    }
    let o = &p[n_hidden * stride..];
    let u: f64 = o[..n_hidden]
        .iter()
        .zip(hidden.iter())
        .map(|(a, b)| a * b)
        .sum::<f64>()
        + o[n_hidden];
    sigmoid(u)
}

/// Accumulates into `g` the gradient of a loss whose derivative with respect
/// to the block output is `d_out`.
#[allow(clippy::too_many_arguments)]
fn block_backward(
    p: &[f64],
    n_in: usize,
    n_hidden: usize,
    x: &[f64],
    hidden: &[f64],
    out: f64,
    d_out: f64,
    g: &mut [f64],
) {
    let delta = d_out * out * (1.0 - out);
    if n_hidden == 0 {
        for (gi, xi) in g[..n_in].iter_mut().zip(x) {
            *gi += delta * xi;
        }
        g[n_in] += delta;
        return;
    }
    let stride = n_in + 1;
    let off = n_hidden * stride;
    for h in 0..n_hidden {
        g[off + h] += delta * hidden[h];
    }
    g[off + n_hidden] += delta;
    for h in 0..n_hidden {
        let dh = delta * p[off + h] * hidden[h] * (1.0 - hidden[h]);
        let gw = &mut g[h * stride..(h + 1) * stride];
        for (gi, xi) in gw[..n_in].iter_mut().zip(x) {
            *gi += dh * xi;
        }
        gw[n_in] += dh;
    }
}

pub(crate) fn forward_params(spec: &NetworkSpec, p: &[f64], x: &[f64], ws: &mut Workspace) -> f64 {
    match spec {
        NetworkSpec::Conventional { n_inputs, n_hidden } => {
            block_forward(p, *n_inputs, *n_hidden, x, &mut ws.hidden)
        }
        NetworkSpec::Adhoc { subnets } => {
            let (mut po, mut xo, mut ho) = (0, 0, 0);
            for (k, s) in subnets.iter().enumerate() {
                let len = block_len(s.n_inputs, s.n_hidden);
                ws.sub_out[k] = block_forward(
                    &p[po..po + len],
                    s.n_inputs,
                    s.n_hidden,
                    &x[xo..xo + s.n_inputs],
                    &mut ws.hidden[ho..ho + s.n_hidden],
                );
                po += len;
                xo += s.n_inputs;
                ho += s.n_hidden;
            }
            let out = &p[po..];
            let n = subnets.len();
            let u: f64 = out[..n]
                .iter()
                .zip(&ws.sub_out)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                + out[n];
            sigmoid(u)
        }
    }
}

/// Forward pass followed by accumulation of `d_out · ∂output/∂params` into
/// `g`. Returns the output.
pub(crate) fn forward_backward(
    spec: &NetworkSpec,
    p: &[f64],
    x: &[f64],
    ws: &mut Workspace,
    d_out: impl Fn(f64) -> f64,
    g: &mut [f64],
) -> f64 {
    let out = forward_params(spec, p, x, ws);
    let d = d_out(out);
    match spec {
        NetworkSpec::Conventional { n_inputs, n_hidden } => {
            block_backward(p, *n_inputs, *n_hidden, x, &ws.hidden, out, d, g);
        }
        NetworkSpec::Adhoc { subnets } => {
            let n = subnets.len();
            let po_out: usize = subnets
                .iter()
                .map(|s| block_len(s.n_inputs, s.n_hidden))
                .sum();
            let delta = d * out * (1.0 - out);
            for k in 0..n {
                g[po_out + k] += delta * ws.sub_out[k];
            }
            g[po_out + n] += delta;
            let (mut po, mut xo, mut ho) = (0, 0, 0);
            for (k, s) in subnets.iter().enumerate() {
                let len = block_len(s.n_inputs, s.n_hidden);
                block_backward(
                    &p[po..po + len],
                    s.n_inputs,
                    s.n_hidden,
                    &x[xo..xo + s.n_inputs],
                    &ws.hidden[ho..ho + s.n_hidden],
                    ws.sub_out[k],
                    delta * p[po_out + k],
                    &mut g[po..po + len],
                );
                po += len;
                xo += s.n_inputs;
                ho += s.n_hidden;
            }
        }
    }
    out
}

/// Splits an ad hoc parameter vector into per-subnet blocks and the output
/// neuron.
pub(crate) fn adhoc_blocks<'a>(
    subnets: &[SubnetSpec],
    p: &'a [f64],
) -> (Vec<&'a [f64]>, &'a [f64]) {
    let mut blocks = Vec::with_capacity(subnets.len());
    let mut po = 0;
    for s in subnets {
        let len = block_len(s.n_inputs, s.n_hidden);
        blocks.push(&p[po..po + len]);
        po += len;
    }
    (blocks, &p[po..])
}
