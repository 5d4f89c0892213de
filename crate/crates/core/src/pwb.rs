//! Power balance between reverberant cavities.
//!
//! Each cavity is assumed to hold a uniform energy density. Power leaves a cavity through
//! an opening of width `w` at a rate proportional to `w`, and into its walls at a rate
//! proportional to the absorption cross-section `alpha * (perimeter - openings)`. Writing
//! `n_i = P_i^tot / sigma_i^tot` for the common ratio, every loss channel of cavity `i`
//! carries `width * n_i`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{pwb_dimensions, Scene};

/// Inputs of the two-cavity balance. Index 0 is the driven cavity.
#[derive(Debug, Clone, PartialEq)]
pub struct PwbInput {
    /// Perimeters including scatterer circumferences.
    pub perimeter: [f64; 2],
    pub port_width: [f64; 2],
    pub aperture_width: f64,
    pub alpha: f64,
    pub p_inj: [f64; 2],
    /// Replaces the geometry-derived total cross-sections when set.
    pub sigma_tot_override: Option<[f64; 2]>,
}

impl PwbInput {
    /// Unit injection into cavity 0.
    pub fn new(perimeter: [f64; 2], port_width: [f64; 2], aperture_width: f64, alpha: f64) -> Self {
        PwbInput {
            perimeter,
            port_width,
            aperture_width,
            alpha,
            p_inj: [1.0, 0.0],
            sigma_tot_override: None,
        }
    }

    pub fn from_scene(scene: &Scene) -> Result<Self> {
        let dims = pwb_dimensions(scene);
        if dims.len() != 2
            || dims
                .iter()
                .any(|d| d.ports.len() != 1 || d.apertures.len() != 1)
        {
            return Err(Error::validation(
                format!("scene `{}`", scene.name),
                "two-cavity balance needs two cavities with one port each and one shared aperture",
            ));
        }
        Ok(PwbInput::new(
            [dims[0].perimeter, dims[1].perimeter],
            [dims[0].ports[0].1, dims[1].ports[0].1],
            dims[0].apertures[0].1,
            scene.alpha,
        ))
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str, why: &str| Err(Error::validation(format!("pwb input {what}"), why));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha", "must lie in [0, 1]");
        }
        if !(self.aperture_width >= 0.0 && self.aperture_width.is_finite()) {
            return bad("aperture_width", "must be finite and non-negative");
        }
        for i in 0..2 {
            if !(self.perimeter[i] > 0.0 && self.perimeter[i].is_finite()) {
                return bad("perimeter", "must be finite and positive");
            }
            if !(self.port_width[i] >= 0.0 && self.port_width[i].is_finite()) {
                return bad("port_width", "must be finite and non-negative");
            }
            if self.port_width[i] + self.aperture_width > self.perimeter[i] {
                return bad("perimeter", "openings exceed the cavity perimeter");
            }
            if !(self.p_inj[i] >= 0.0 && self.p_inj[i].is_finite()) {
                return bad("p_inj", "must be finite and non-negative");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PwbReport {
    pub sigma_wall: [f64; 2],
    pub sigma_tot: [f64; 2],
    pub p_tot: [f64; 2],
    pub p_port: [f64; 2],
    /// `p_back[i]`: power entering cavity `i` through the aperture from the other cavity.
    pub p_back: [f64; 2],
    pub p_wall: [f64; 2],
}

impl PwbReport {
    /// Largest relative mismatch of `port + wall + outgoing aperture = total` over both cavities.
    pub fn balance_defect(&self) -> f64 {
        (0..2)
            .map(|i| {
                let out = self.p_port[i] + self.p_wall[i] + self.p_back[1 - i];
                (out - self.p_tot[i]).abs() / self.p_tot[i].max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }
}

pub fn solve_two_cavity(input: &PwbInput) -> Result<PwbReport> {
    input.validate()?;
    let w = input.port_width;
    let wa = input.aperture_width;
    let (sigma_wall, sigma_tot) = match input.sigma_tot_override {
        Some(tot) => {
            let wall = [tot[0] - w[0] - wa, tot[1] - w[1] - wa];
            if wall.iter().any(|&s| s < 0.0) {
                return Err(Error::validation(
                    "pwb input sigma_tot_override",
                    "smaller than the total opening width",
                ));
            }
            (wall, tot)
        }
        None => {
            let wall = [
                input.alpha * (input.perimeter[0] - (w[0] + wa)),
                input.alpha * (input.perimeter[1] - (w[1] + wa)),
            ];
            (wall, [wall[0] + w[0] + wa, wall[1] + w[1] + wa])
        }
    };
    if sigma_tot.iter().any(|&s| s <= 0.0) {
        return Err(Error::Singular(
            "a cavity has neither wall loss nor openings; its energy grows without bound".into(),
        ));
    }
    let det = sigma_tot[0] * sigma_tot[1] - wa * wa;
    if det <= 0.0 {
        return Err(Error::Singular(format!(
            "aperture coupling {wa}^2 is not smaller than sigma_1 * sigma_2 = {}",
            sigma_tot[0] * sigma_tot[1]
        )));
    }
    // sigma_1 n_1 - w_A n_2 = P_1^inj,  -w_A n_1 + sigma_2 n_2 = P_2^inj
    let n = [
        (sigma_tot[1] * input.p_inj[0] + wa * input.p_inj[1]) / det,
        (sigma_tot[0] * input.p_inj[1] + wa * input.p_inj[0]) / det,
    ];
    Ok(PwbReport {
        sigma_wall,
        sigma_tot,
        p_tot: [sigma_tot[0] * n[0], sigma_tot[1] * n[1]],
        p_port: [w[0] * n[0], w[1] * n[1]],
        p_back: [wa * n[1], wa * n[0]],
        p_wall: [sigma_wall[0] * n[0], sigma_wall[1] * n[1]],
    })
}

/// Fraction of the power injected into cavity 1 that leaves through port 1 when walls are lossless.
pub fn lossless_two_cavity_ratio(w1: f64, w2: f64, wa: f64) -> f64 {
    w1 * (w2 + wa) / (w1 * w2 + wa * (w1 + w2))
}

/// Lossless single cavity with two openings: share of the power leaving through the first.
pub fn single_cavity_ratio(w1: f64, wa: f64) -> f64 {
    w1 / (w1 + wa)
}

// ---------------------------------------------------------------------------
// General network of cavities
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct NetworkCavity {
    pub id: String,
    pub perimeter: f64,
    pub ports: Vec<(String, f64)>,
}

#[derive(Debug, Clone)]
pub struct NetworkAperture {
    pub id: String,
    pub a: usize,
    pub b: usize,
    pub width: f64,
}

/// Balance over any number of cavities coupled by apertures.
#[derive(Debug, Clone)]
pub struct PwbNetwork {
    pub cavities: Vec<NetworkCavity>,
    pub apertures: Vec<NetworkAperture>,
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub struct NetworkReport {
    pub sigma_wall: Vec<f64>,
    pub sigma_tot: Vec<f64>,
    pub p_tot: Vec<f64>,
    pub p_wall: Vec<f64>,
    /// `(port id, power out)`.
    pub p_port: Vec<(String, f64)>,
    /// `(aperture id, power a→b, power b→a)`.
    pub p_aperture: Vec<(String, f64, f64)>,
}

impl NetworkReport {
    pub fn port(&self, id: &str) -> Option<f64> {
        self.p_port.iter().find(|p| p.0 == id).map(|p| p.1)
    }

    /// Injected power minus everything that left through ports or walls.
    pub fn conservation_defect(&self, injected: f64) -> f64 {
        let out: f64 =
            self.p_port.iter().map(|p| p.1).sum::<f64>() + self.p_wall.iter().sum::<f64>();
        (injected - out).abs()
    }
}

impl PwbNetwork {
    pub fn from_scene(scene: &Scene) -> PwbNetwork {
        let dims = pwb_dimensions(scene);
        let cavities = dims
            .iter()
            .map(|d| NetworkCavity {
                id: d.cavity.clone(),
                perimeter: d.perimeter,
                ports: d.ports.clone(),
            })
            .collect();
        let apertures = scene
            .openings
            .iter()
            .filter_map(|o| {
                o.far_cavity.map(|b| NetworkAperture {
                    id: o.id.clone(),
                    a: o.cavity,
                    b,
                    width: o.width,
                })
            })
            .collect();
        PwbNetwork {
            cavities,
            apertures,
            alpha: scene.alpha,
        }
    }

    pub fn solve(&self, injection: &[f64]) -> Result<NetworkReport> {
        let n = self.cavities.len();
        if injection.len() != n {
            return Err(Error::validation(
                "pwb injection",
                format!("expected {n} entries, got {}", injection.len()),
            ));
        }
        let mut openings = vec![0.0; n];
        for (i, c) in self.cavities.iter().enumerate() {
            openings[i] += c.ports.iter().map(|p| p.1).sum::<f64>();
        }
        for a in &self.apertures {
            openings[a.a] += a.width;
            openings[a.b] += a.width;
        }
        let sigma_wall: Vec<f64> = (0..n)
            .map(|i| self.alpha * (self.cavities[i].perimeter - openings[i]))
            .collect();
        let sigma_tot: Vec<f64> = (0..n).map(|i| sigma_wall[i] + openings[i]).collect();

        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = sigma_tot[i];
        }
        for a in &self.apertures {
            m[(a.a, a.b)] -= a.width;
            m[(a.b, a.a)] -= a.width;
        }
        let rhs = DVector::from_column_slice(injection);
        let density = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("power balance matrix is singular".into()))?;
        if density.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Singular(
                "power balance has no non-negative solution".into(),
            ));
        }

        let p_port = self
            .cavities
            .iter()
            .enumerate()
            .flat_map(|(i, c)| {
                let d = density[i];
                c.ports.iter().map(move |(id, w)| (id.clone(), w * d))
            })
            .collect();
        let p_aperture = self
            .apertures
            .iter()
            .map(|a| (a.id.clone(), a.width * density[a.a], a.width * density[a.b]))
            .collect();
        Ok(NetworkReport {
            p_tot: (0..n).map(|i| sigma_tot[i] * density[i]).collect(),
            p_wall: (0..n).map(|i| sigma_wall[i] * density[i]).collect(),
            sigma_wall,
            sigma_tot,
            p_port,
            p_aperture,
        })
    }
}
