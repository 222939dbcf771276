use crate::envs::PendulumState;
use crate::error::{Error, Result};

/// Maps observations to a sparse set of active binary features.
pub trait Featurizer: Send {
    type Obs;

    fn n_features(&self) -> usize;

    /// Indices of the features that are 1; all others are 0.
    fn active(&self, obs: &Self::Obs) -> Vec<usize>;
}

/// Grid tile coder with uniformly staggered tilings.
///
/// Tiling `k` is displaced by `k / n_tilings` of a tile width along every
/// dimension. Each tiling has exactly `tiles_per_dim[d]` tiles per
/// dimension: on bounded dimensions the edge tiles absorb the displacement,
/// on wrapping dimensions coordinates wrap around.
#[derive(Debug, Clone, PartialEq)]
pub struct TileCoder {
    n_tilings: usize,
    tiles_per_dim: Vec<usize>,
    bounds: Vec<(f64, f64)>,
    wrap: Vec<bool>,
}

impl TileCoder {
    pub fn new(n_tilings: usize, tiles_per_dim: Vec<usize>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        let dims = bounds.len();
        Self::with_wrap(n_tilings, tiles_per_dim, bounds, vec![false; dims])
    }

    pub fn with_wrap(
        n_tilings: usize,
        tiles_per_dim: Vec<usize>,
        bounds: Vec<(f64, f64)>,
        wrap: Vec<bool>,
    ) -> Result<Self> {
        if n_tilings == 0 || tiles_per_dim.is_empty() || tiles_per_dim.contains(&0) {
            return Err(Error::invalid("tile coder needs tilings and tiles"));
        }
        if tiles_per_dim.len() != bounds.len() || wrap.len() != bounds.len() {
            return Err(Error::invalid("tile coder dimension lists disagree"));
        }
        if bounds.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::invalid("tile coder bounds must satisfy lo < hi"));
        }
        Ok(TileCoder {
            n_tilings,
            tiles_per_dim,
            bounds,
            wrap,
        })
    }

    pub fn n_tilings(&self) -> usize {
        self.n_tilings
    }

    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    fn tiles_per_tiling(&self) -> usize {
        self.tiles_per_dim.iter().product()
    }

    pub fn n_features(&self) -> usize {
        self.n_tilings * self.tiles_per_tiling()
    }

    /// Per-tiling, per-dimension tile coordinates.
    pub fn coordinates(&self, state: &[f64]) -> Result<Vec<Vec<usize>>> {
        if state.len() != self.dims() {
            return Err(Error::invalid(format!(
                "state has {} dimensions, coder expects {}",
                state.len(),
                self.dims()
            )));
        }
        Ok((0..self.n_tilings)
            .map(|k| {
                let shift = k as f64 / self.n_tilings as f64;
                state
                    .iter()
                    .enumerate()
                    .map(|(d, &x)| {
                        let (lo, hi) = self.bounds[d];
                        let tiles = self.tiles_per_dim[d];
                        let width = (hi - lo) / tiles as f64;
                        let x = if self.wrap[d] { x } else { x.clamp(lo, hi) };
                        let cell = ((x - lo) / width + shift).floor() as i64;
                        if self.wrap[d] {
                            cell.rem_euclid(tiles as i64) as usize
                        } else {
                            cell.clamp(0, tiles as i64 - 1) as usize
                        }
                    })
                    .collect()
            })
            .collect())
    }

    /// Exactly `n_tilings` indices, one per tiling, in tiling order.
    pub fn active_indices(&self, state: &[f64]) -> Result<Vec<usize>> {
        let per = self.tiles_per_tiling();
        Ok(self
            .coordinates(state)?
            .into_iter()
            .enumerate()
            .map(|(k, coords)| {
                let flat = coords
                    .iter()
                    .zip(&self.tiles_per_dim)
                    .fold(0, |acc, (&c, &t)| acc * t + c);
                k * per + flat
            })
            .collect())
    }
}

/// Tile coder over `(angle, angular velocity)`; the angle wraps.
#[derive(Debug, Clone)]
pub struct PendulumCoder(pub TileCoder);

impl PendulumCoder {
    pub fn new(n_tilings: usize, tiles: usize) -> Result<Self> {
        use std::f64::consts::PI;
        Ok(PendulumCoder(TileCoder::with_wrap(
            n_tilings,
            vec![tiles, tiles],
            vec![(-PI, PI), (-8.0, 8.0)],
            vec![true, false],
        )?))
    }
}

impl Featurizer for PendulumCoder {
    type Obs = PendulumState;

    fn n_features(&self) -> usize {
        self.0.n_features()
    }

    fn active(&self, obs: &PendulumState) -> Vec<usize> {
        self.0
            .active_indices(&obs.as_array())
            .expect("pendulum state is two-dimensional")
    }
}

/// One feature per discrete state; turns the linear agents into their
/// tabular counterparts.
#[derive(Debug, Clone, Copy)]
pub struct OneHot {
    pub n_states: usize,
}

impl Featurizer for OneHot {
    type Obs = usize;

    fn n_features(&self) -> usize {
        self.n_states
    }

    fn active(&self, obs: &usize) -> Vec<usize> {
        vec![*obs]
    }
}
