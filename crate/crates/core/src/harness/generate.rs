use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cake::{ExactScalar, Valuation};
use crate::error::{CakeError, CakeResult};
use crate::graph::{GraphKind, SocialGraph};
use crate::oracle::Instance;

pub const DEFAULT_DENOMINATOR: u32 = 1000;
const MAX_WEIGHT: i64 = 20;

/// Shape of a random instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenParams {
    pub seed: u64,
    pub n: usize,
    pub kind: GraphKind,
    pub segments: usize,
    /// Breakpoints are multiples of `1 / denominator`.
    pub denominator: u32,
}

impl GenParams {
    pub fn new(seed: u64, n: usize, kind: GraphKind, segments: usize) -> Self {
        GenParams {
            seed,
            n,
            kind,
            segments,
            denominator: DEFAULT_DENOMINATOR,
        }
    }
}

/// Same parameters, same instance.
pub fn generate_instance(seed: u64, n: usize, kind: GraphKind, segments: usize) -> CakeResult<Instance> {
    generate(&GenParams::new(seed, n, kind, segments))
}

pub fn generate(p: &GenParams) -> CakeResult<Instance> {
    if p.n < 2 {
        return Err(CakeError::BadShapeParams(format!("n = {} but at least 2 agents are needed", p.n)));
    }
    if p.segments == 0 || p.segments > p.denominator as usize {
        return Err(CakeError::BadShapeParams(format!(
            "{} segments do not fit a grid of 1/{}",
            p.segments, p.denominator
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let graph = random_graph(&mut rng, p.kind, p.n)?;
    let valuations = (0..p.n)
        .map(|_| random_valuation(&mut rng, p.segments, p.denominator))
        .collect::<CakeResult<Vec<_>>>()?;
    Instance::new(valuations, graph)
}

fn random_valuation(rng: &mut ChaCha8Rng, segments: usize, denominator: u32) -> CakeResult<Valuation> {
    let d = denominator as usize;
    let mut interior: Vec<usize> = sample(rng, d - 1, segments - 1).into_iter().map(|i| i + 1).collect();
    interior.sort_unstable();
    let mut breakpoints = vec![ExactScalar::zero()];
    breakpoints.extend(interior.iter().map(|&i| ExactScalar::ratio(i as i64, d as i64)));
    breakpoints.push(ExactScalar::one());
    let weights: Vec<i64> = (0..segments).map(|_| rng.random_range(1..=MAX_WEIGHT)).collect();
    Valuation::from_weights(breakpoints, &weights)
}

/// Builds parents in creation order (node 0 is the root) and then labels
/// node `c` as `n - 1 - c`, so every parent outranks its children.
fn from_creation_order(kind: GraphKind, created: &[Option<usize>]) -> CakeResult<SocialGraph> {
    let n = created.len();
    let mut parent = vec![None; n];
    for (c, p) in created.iter().enumerate() {
        parent[n - 1 - c] = p.map(|p| n - 1 - p);
    }
    SocialGraph::new(kind, parent)
}

fn random_graph(rng: &mut ChaCha8Rng, kind: GraphKind, n: usize) -> CakeResult<SocialGraph> {
    match kind {
        GraphKind::Line => Ok(SocialGraph::line(n)),
        GraphKind::Star => Ok(SocialGraph::star(n)),
        GraphKind::Tree => {
            let created: Vec<Option<usize>> = (0..n).map(|c| (c > 0).then(|| rng.random_range(0..c))).collect();
            from_creation_order(kind, &created)
        }
        GraphKind::Depth2Tree => {
            let m = rng.random_range(1..n);
            let mut created = vec![None];
            created.extend((0..m).map(|_| Some(0)));
            created.extend((m + 1..n).map(|_| Some(rng.random_range(1..=m))));
            from_creation_order(kind, &created)
        }
        GraphKind::TwoStar => {
            let m = rng.random_range((n - 1).div_ceil(2)..n);
            let mut created = vec![None];
            created.extend((0..m).map(|_| Some(0)));
            let hosts = sample(rng, m, n - 1 - m);
            created.extend(hosts.into_iter().map(|h| Some(h + 1)));
            from_creation_order(kind, &created)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cake::Piece;
    use crate::graph::topological_check;

    #[test]
    fn deterministic() {
        let a = serde_json::to_string(&generate_instance(42, 4, GraphKind::Line, 3).unwrap()).unwrap();
        let b = serde_json::to_string(&generate_instance(42, 4, GraphKind::Line, 3).unwrap()).unwrap();
        assert_eq!(a, b);
        let c = serde_json::to_string(&generate_instance(43, 4, GraphKind::Line, 3).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn normalized_and_shaped() {
        for kind in [GraphKind::Line, GraphKind::Tree, GraphKind::Depth2Tree, GraphKind::TwoStar, GraphKind::Star] {
            for seed in 0..20 {
                let inst = generate_instance(seed, 9, kind, 4).unwrap();
                assert_eq!(inst.graph().kind(), kind);
                assert!(inst.graph().check().is_empty());
                for i in 0..9 {
                    assert_eq!(inst.value(i, &Piece::whole()), ExactScalar::one());
                    assert_eq!(inst.valuation(i).densities().len(), 4);
                }
            }
        }
    }

    #[test]
    fn thirteen_agent_tree() {
        let inst = generate_instance(7, 13, GraphKind::Tree, 2).unwrap();
        assert!(topological_check(GraphKind::Tree, &inst.graph().labelled_parents()).is_empty());
    }

    #[test]
    fn rejects_bad_params() {
        assert!(matches!(
            generate_instance(0, 1, GraphKind::Line, 2),
            Err(CakeError::BadShapeParams(_))
        ));
        assert!(generate_instance(0, 3, GraphKind::Line, 0).is_err());
    }
}
