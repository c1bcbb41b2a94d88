//! Synthetic data sets with known cluster labels.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GeneratorSpec {
    /// Two interleaved half circles of radius 1 in the plane.
    HalfMoons { n1: usize, n2: usize, noise: f64 },
    /// Three five-armed stars; each arm is an isosceles triangle of length
    /// `arm_length` and base `arm_width`, points drawn uniformly inside it.
    /// Neighbouring stars' tips are `gap` apart.
    StarShaped {
        points_per_arm: usize,
        arm_length: f64,
        arm_width: f64,
        gap: f64,
        sigma: f64,
    },
    /// Uniform points in two axis-aligned cubes with half-edges `half1`,
    /// `half2`, centres `separation` apart along the first axis.
    TwoCubes {
        n1: usize,
        n2: usize,
        dim: usize,
        half1: f64,
        half2: f64,
        separation: f64,
    },
    GaussianMixture {
        components: usize,
        per_component: usize,
        dim: usize,
        spread: f64,
        sigma: f64,
    },
    /// Five clusters of five points; clusters 0-2 and 3-4 form two super-clusters.
    Hierarchy5x5 { sigma: f64 },
    /// Uniform points in two unit balls centred at `+r e_1` and `-r e_1`.
    TwoBalls { n: usize, dim: usize, r: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub data: DataMatrix,
    pub labels: Vec<usize>,
    /// Coarser grouping where the generator defines one (super-clusters).
    pub meta_labels: Option<Vec<usize>>,
}

impl GeneratorSpec {
    pub fn half_moons(n1: usize, n2: usize, noise: f64) -> Self {
        GeneratorSpec::HalfMoons { n1, n2, noise }
    }

    pub fn star_shaped(sigma: f64) -> Self {
        GeneratorSpec::StarShaped {
            points_per_arm: 6,
            arm_length: 1.0,
            arm_width: 0.5,
            gap: 1.5,
            sigma,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GeneratorSpec::HalfMoons { .. } => "half_moons",
            GeneratorSpec::StarShaped { .. } => "star_shaped",
            GeneratorSpec::TwoCubes { .. } => "two_cubes",
            GeneratorSpec::GaussianMixture { .. } => "gaussian_mixture",
            GeneratorSpec::Hierarchy5x5 { .. } => "hierarchy_5x5",
            GeneratorSpec::TwoBalls { .. } => "two_balls",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        let positive = |name: &str, v: usize| {
            if v >= 1 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be >= 1")))
            }
        };
        match *self {
            GeneratorSpec::HalfMoons { n1, n2, noise } => {
                positive("n1", n1)?;
                positive("n2", n2)?;
                nonneg("noise", noise)
            }
            GeneratorSpec::StarShaped {
                points_per_arm,
                arm_length,
                arm_width,
                gap,
                sigma,
            } => {
                positive("points_per_arm", points_per_arm)?;
                nonneg("arm_length", arm_length)?;
                nonneg("arm_width", arm_width)?;
                nonneg("gap", gap)?;
                nonneg("sigma", sigma)
            }
            GeneratorSpec::TwoCubes {
                n1,
                n2,
                dim,
                half1,
                half2,
                separation,
            } => {
                positive("n1", n1)?;
                positive("n2", n2)?;
                positive("dim", dim)?;
                nonneg("half1", half1)?;
                nonneg("half2", half2)?;
                nonneg("separation", separation)
            }
            GeneratorSpec::GaussianMixture {
                components,
                per_component,
                dim,
                spread,
                sigma,
            } => {
                positive("components", components)?;
                positive("per_component", per_component)?;
                positive("dim", dim)?;
                nonneg("spread", spread)?;
                nonneg("sigma", sigma)
            }
            GeneratorSpec::Hierarchy5x5 { sigma } => nonneg("sigma", sigma),
            GeneratorSpec::TwoBalls { n, dim, r } => {
                positive("n", n)?;
                positive("dim", dim)?;
                nonneg("r", r)
            }
        }
    }
}

fn noisy<R: Rng>(rng: &mut R, sigma: f64) -> f64 {
    if sigma > 0.0 {
        Normal::new(0.0, sigma).expect("sigma checked").sample(rng)
    } else {
        0.0
    }
}

/// Deterministic under `seed`; labels number the generating components.
pub fn generate(spec: &GeneratorSpec, seed: u64) -> Result<Generated> {
    spec.validate()?;
    let mut rng = rng::stream(seed, &format!("generate/{}", spec.name()));
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    let mut meta = None;
    match *spec {
        GeneratorSpec::HalfMoons { n1, n2, noise } => {
            for k in 0..n1 {
                let t = PI * k as f64 / (n1.max(2) - 1) as f64;
                cols.push(vec![t.cos() + noisy(&mut rng, noise), t.sin() + noisy(&mut rng, noise)]);
                labels.push(0);
            }
            for k in 0..n2 {
                let t = PI * k as f64 / (n2.max(2) - 1) as f64;
                cols.push(vec![
                    1.0 - t.cos() + noisy(&mut rng, noise),
                    0.5 - t.sin() + noisy(&mut rng, noise),
                ]);
                labels.push(1);
            }
        }
        GeneratorSpec::StarShaped {
            points_per_arm,
            arm_length,
            arm_width,
            gap,
            sigma,
        } => {
            // Star centres on an equilateral triangle; tips of facing arms are `gap` apart.
            let side = 2.0 * arm_length + gap;
            let centres = [(0.0, 0.0), (side, 0.0), (0.5 * side, side * (3.0_f64).sqrt() / 2.0)];
            for (s, &(cx, cy)) in centres.iter().enumerate() {
                let offset = rng.random::<f64>() * 2.0 * PI / 5.0;
                for a in 0..5 {
                    let theta = offset + 2.0 * PI * a as f64 / 5.0;
                    let (dx, dy) = (theta.cos(), theta.sin());
                    for j in 0..points_per_arm {
                        // Uniform in the triangle (base at the centre, apex at the
                        // tip), stratified by area so every arm reaches the centre.
                        let q = (j as f64 + rng.random::<f64>()) / points_per_arm as f64;
                        let t = 1.0 - (1.0 - q).sqrt();
                        let lateral = (rng.random::<f64>() - 0.5) * arm_width * (1.0 - t);
                        let (x, y) = (
                            cx + t * arm_length * dx - lateral * dy,
                            cy + t * arm_length * dy + lateral * dx,
                        );
                        cols.push(vec![x + noisy(&mut rng, sigma), y + noisy(&mut rng, sigma)]);
                        labels.push(s);
                    }
                }
            }
        }
        GeneratorSpec::TwoCubes {
            n1,
            n2,
            dim,
            half1,
            half2,
            separation,
        } => {
            for (label, count, half, shift) in [(0, n1, half1, 0.0), (1, n2, half2, separation)] {
                for _ in 0..count {
                    let mut c: Vec<f64> = (0..dim).map(|_| (2.0 * rng.random::<f64>() - 1.0) * half).collect();
                    c[0] += shift;
                    cols.push(c);
                    labels.push(label);
                }
            }
        }
        GeneratorSpec::GaussianMixture {
            components,
            per_component,
            dim,
            spread,
            sigma,
        } => {
            let centres: Vec<Vec<f64>> = (0..components)
                .map(|_| (0..dim).map(|_| (2.0 * rng.random::<f64>() - 1.0) * spread).collect())
                .collect();
            for (label, c) in centres.iter().enumerate() {
                for _ in 0..per_component {
                    cols.push(c.iter().map(|v| v + noisy(&mut rng, sigma)).collect());
                    labels.push(label);
                }
            }
        }
        GeneratorSpec::Hierarchy5x5 { sigma } => {
            let centres = [(0.0, 0.0), (4.0, 0.0), (2.0, 3.5), (14.0, 0.0), (18.0, 0.0)];
            let supers = [0, 0, 0, 1, 1];
            let mut meta_labels = Vec::new();
            for (label, &(cx, cy)) in centres.iter().enumerate() {
                for k in 0..5 {
                    let t = 2.0 * PI * k as f64 / 5.0;
                    cols.push(vec![
                        cx + 0.5 * t.cos() + noisy(&mut rng, sigma),
                        cy + 0.5 * t.sin() + noisy(&mut rng, sigma),
                    ]);
                    labels.push(label);
                    meta_labels.push(supers[label]);
                }
            }
            meta = Some(meta_labels);
        }
        GeneratorSpec::TwoBalls { n, dim, r } => {
            for k in 0..n {
                let label = k % 2;
                let dir: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                let radius = rng.random::<f64>().powf(1.0 / dim as f64);
                let mut c: Vec<f64> = dir.iter().map(|v| v / norm * radius).collect();
                c[0] += if label == 0 { r } else { -r };
                cols.push(c);
                labels.push(label);
            }
        }
    }
    Ok(Generated {
        data: DataMatrix::from_observations(&cols)?,
        labels,
        meta_labels: meta,
    })
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    /// `kind[:key=value,...]`, e.g. `half_moons:n1=20,n2=20,noise=0.05`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params = std::collections::BTreeMap::new();
        for kv in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("expected key=value in '{kv}'")))?;
            params.insert(k.trim().to_string(), v.trim().to_string());
        }
        let mut take = |key: &str, default: f64| -> Result<f64> {
            match params.remove(key) {
                Some(v) => v
                    .parse::<f64>()
                    .map_err(|_| Error::invalid(format!("bad value for {key}: '{v}'"))),
                None => Ok(default),
            }
        };
        let count = |v: f64| v.max(0.0).round() as usize;
        let spec = match kind {
            "half_moons" => GeneratorSpec::HalfMoons {
                n1: count(take("n1", 20.0)?),
                n2: count(take("n2", 20.0)?),
                noise: take("noise", 0.05)?,
            },
            "star_shaped" => {
                let d = GeneratorSpec::star_shaped(0.0);
                let GeneratorSpec::StarShaped {
                    points_per_arm,
                    arm_length,
                    arm_width,
                    gap,
                    ..
                } = d
                else {
                    unreachable!()
                };
                GeneratorSpec::StarShaped {
                    points_per_arm: count(take("points_per_arm", points_per_arm as f64)?),
                    arm_length: take("arm_length", arm_length)?,
                    arm_width: take("arm_width", arm_width)?,
                    gap: take("gap", gap)?,
                    sigma: take("sigma", 0.0)?,
                }
            }
            "two_cubes" => GeneratorSpec::TwoCubes {
                n1: count(take("n1", 10.0)?),
                n2: count(take("n2", 10.0)?),
                dim: count(take("dim", 2.0)?),
                half1: take("half1", 0.5)?,
                half2: take("half2", 0.5)?,
                separation: take("separation", 4.0)?,
            },
            "gaussian_mixture" => GeneratorSpec::GaussianMixture {
                components: count(take("components", 3.0)?),
                per_component: count(take("per_component", 10.0)?),
                dim: count(take("dim", 2.0)?),
                spread: take("spread", 5.0)?,
                sigma: take("sigma", 0.5)?,
            },
            "hierarchy_5x5" => GeneratorSpec::Hierarchy5x5 {
                sigma: take("sigma", 0.05)?,
            },
            "two_balls" => GeneratorSpec::TwoBalls {
                n: count(take("n", 40.0)?),
                dim: count(take("dim", 2.0)?),
                r: take("r", 1.5)?,
            },
            other => return Err(Error::invalid(format!("unknown generator '{other}'"))),
        };
        if let Some(key) = params.keys().next() {
            return Err(Error::invalid(format!("unknown parameter '{key}' for {kind}")));
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GeneratorSpec::HalfMoons { n1, n2, noise } => write!(f, "half_moons:n1={n1},n2={n2},noise={noise}"),
            GeneratorSpec::StarShaped {
                points_per_arm,
                arm_length,
                arm_width,
                gap,
                sigma,
            } => write!(
                f,
                "star_shaped:points_per_arm={points_per_arm},arm_length={arm_length},arm_width={arm_width},gap={gap},sigma={sigma}"
            ),
            GeneratorSpec::TwoCubes {
                n1,
                n2,
                dim,
                half1,
                half2,
                separation,
            } => write!(
                f,
                "two_cubes:n1={n1},n2={n2},dim={dim},half1={half1},half2={half2},separation={separation}"
            ),
            GeneratorSpec::GaussianMixture {
                components,
                per_component,
                dim,
                spread,
                sigma,
            } => write!(
                f,
                "gaussian_mixture:components={components},per_component={per_component},dim={dim},spread={spread},sigma={sigma}"
            ),
            GeneratorSpec::Hierarchy5x5 { sigma } => write!(f, "hierarchy_5x5:sigma={sigma}"),
            GeneratorSpec::TwoBalls { n, dim, r } => write!(f, "two_balls:n={n},dim={dim},r={r}"),
        }
    }
}
