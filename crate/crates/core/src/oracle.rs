//! Robertson-Webb queries over an instance, with a charging ledger.

use serde::{Deserialize, Serialize};

use crate::cake::{ExactScalar, Piece, Valuation};
use crate::error::{CakeError, CakeResult};
use crate::graph::SocialGraph;

/// Agents, their valuations and the social graph, all in internal indexing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    valuations: Vec<Valuation>,
    graph: SocialGraph,
}

impl Instance {
    /// `valuations[i]` belongs to internal agent `i`.
    pub fn new(valuations: Vec<Valuation>, graph: SocialGraph) -> CakeResult<Self> {
        if valuations.len() != graph.n() {
            return Err(CakeError::WrongShape(format!(
                "{} valuations for {} agents",
                valuations.len(),
                graph.n()
            )));
        }
        Ok(Instance { valuations, graph })
    }

    /// Valuations listed in the graph's original labelling.
    pub fn from_labelled(labelled: Vec<Valuation>, graph: SocialGraph) -> CakeResult<Self> {
        if labelled.len() != graph.n() {
            return Instance::new(labelled, graph);
        }
        let valuations = graph.labels().iter().map(|&l| labelled[l].clone()).collect();
        Instance::new(valuations, graph)
    }

    pub fn uniform(graph: SocialGraph) -> Self {
        let n = graph.n();
        Instance {
            valuations: vec![Valuation::uniform(); n],
            graph,
        }
    }

    pub fn n(&self) -> usize {
        self.valuations.len()
    }

    pub fn graph(&self) -> &SocialGraph {
        &self.graph
    }

    pub fn valuation(&self, agent: usize) -> &Valuation {
        &self.valuations[agent]
    }

    pub fn valuations(&self) -> &[Valuation] {
        &self.valuations
    }

    pub fn value(&self, agent: usize, p: &Piece) -> ExactScalar {
        self.valuations[agent].value_of(p)
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    n: usize,
    graph: SocialGraph,
    valuations: Vec<Valuation>,
}

impl Serialize for Instance {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut labelled = vec![Valuation::uniform(); self.n()];
        for (i, &l) in self.graph.labels().iter().enumerate() {
            labelled[l] = self.valuations[i].clone();
        }
        InstanceJson {
            n: self.n(),
            graph: self.graph.clone(),
            valuations: labelled,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Instance {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = InstanceJson::deserialize(deserializer)?;
        if raw.n != raw.valuations.len() || raw.n != raw.graph.n() {
            return Err(serde::de::Error::custom("n disagrees with graph or valuations"));
        }
        Instance::from_labelled(raw.valuations, raw.graph).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentCounts {
    pub cut: u64,
    pub eval: u64,
}

/// Charged query counters plus uncharged look-ups.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QueryLedger {
    per_agent: Vec<AgentCounts>,
    raw_eval: u64,
}

impl QueryLedger {
    pub fn new(n: usize) -> Self {
        QueryLedger {
            per_agent: vec![AgentCounts::default(); n],
            raw_eval: 0,
        }
    }

    pub fn cut(&self) -> u64 {
        self.per_agent.iter().map(|c| c.cut).sum()
    }

    pub fn eval(&self) -> u64 {
        self.per_agent.iter().map(|c| c.eval).sum()
    }

    pub fn total(&self) -> u64 {
        self.cut() + self.eval()
    }

    pub fn raw_eval(&self) -> u64 {
        self.raw_eval
    }

    pub fn agent(&self, i: usize) -> AgentCounts {
        self.per_agent[i]
    }

    pub fn per_agent(&self) -> &[AgentCounts] {
        &self.per_agent
    }
}

#[derive(Serialize, Deserialize)]
struct LedgerJson {
    cut: u64,
    eval: u64,
    raw_eval: u64,
    per_agent: Vec<AgentCounts>,
}

impl Serialize for QueryLedger {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        LedgerJson {
            cut: self.cut(),
            eval: self.eval(),
            raw_eval: self.raw_eval,
            per_agent: self.per_agent.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QueryLedger {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = LedgerJson::deserialize(deserializer)?;
        let ledger = QueryLedger {
            per_agent: raw.per_agent,
            raw_eval: raw.raw_eval,
        };
        if ledger.cut() != raw.cut || ledger.eval() != raw.eval {
            return Err(serde::de::Error::custom("ledger totals disagree with per-agent counts"));
        }
        Ok(ledger)
    }
}

/// Answers queries about one instance and charges them to a ledger.
#[derive(Debug)]
pub struct Oracle<'a> {
    instance: &'a Instance,
    ledger: QueryLedger,
    scissor_cuts: u64,
}

impl<'a> Oracle<'a> {
    pub fn new(instance: &'a Instance) -> Self {
        Oracle {
            instance,
            ledger: QueryLedger::new(instance.n()),
            scissor_cuts: 0,
        }
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    pub fn into_ledger(self) -> QueryLedger {
        self.ledger
    }

    /// Physical boundaries created so far, independent of charging.
    pub fn scissor_cuts(&self) -> u64 {
        self.scissor_cuts
    }

    pub(crate) fn add_scissor_cuts(&mut self, k: u64) {
        self.scissor_cuts += k;
    }

    fn check_agent(&self, agent: usize) -> CakeResult<()> {
        if agent >= self.instance.n() {
            return Err(CakeError::UnknownAgent {
                agent,
                n: self.instance.n(),
            });
        }
        Ok(())
    }

    pub fn charge_cuts(&mut self, agent: usize, k: u64) {
        self.ledger.per_agent[agent].cut += k;
    }

    pub fn charge_evals(&mut self, agent: usize, k: u64) {
        self.ledger.per_agent[agent].eval += k;
    }

    /// `v_agent([x, y])`, one eval.
    pub fn eval_query(
        &mut self,
        agent: usize,
        x: &ExactScalar,
        y: &ExactScalar,
    ) -> CakeResult<ExactScalar> {
        self.check_agent(agent)?;
        if x >= y || x.is_negative() || *y > ExactScalar::one() {
            return Err(CakeError::BadRange {
                x: x.clone(),
                y: y.clone(),
            });
        }
        self.charge_evals(agent, 1);
        Ok(self.instance.valuation(agent).value_of_interval(x, y))
    }

    /// Smallest `y` with `v_agent([x, y]) = tau`, one cut.
    pub fn cut_query(
        &mut self,
        agent: usize,
        x: &ExactScalar,
        tau: &ExactScalar,
    ) -> CakeResult<ExactScalar> {
        self.check_agent(agent)?;
        let one = ExactScalar::one();
        if x.is_negative() || *x > one || tau.is_negative() {
            return Err(CakeError::BadRange {
                x: x.clone(),
                y: one,
            });
        }
        let v = self.instance.valuation(agent);
        if v.value_of_interval(x, &one) < *tau {
            return Err(CakeError::Unsatisfiable {
                x: x.clone(),
                tau: tau.clone(),
            });
        }
        self.charge_cuts(agent, 1);
        Ok(v.inverse_cdf(&(v.cdf(x) + tau)))
    }

    /// Cut over a collection of intervals; one cut.
    pub fn cut_piece(
        &mut self,
        agent: usize,
        p: &Piece,
        tau: &ExactScalar,
    ) -> CakeResult<(Piece, Piece)> {
        self.check_agent(agent)?;
        let out = self.instance.valuation(agent).inverse_cut(p, tau)?;
        self.charge_cuts(agent, 1);
        Ok(out)
    }

    /// Cut without charging, for protocols whose charge is fixed elsewhere.
    pub(crate) fn cut_piece_uncharged(
        &self,
        agent: usize,
        p: &Piece,
        tau: &ExactScalar,
    ) -> CakeResult<(Piece, Piece)> {
        self.check_agent(agent)?;
        self.instance.valuation(agent).inverse_cut(p, tau)
    }

    /// Value of a piece, one eval.
    pub fn eval_piece(&mut self, agent: usize, p: &Piece) -> CakeResult<ExactScalar> {
        self.check_agent(agent)?;
        self.charge_evals(agent, 1);
        Ok(self.instance.value(agent, p))
    }

    /// Value the agent already knows; counted only as a raw look-up.
    pub fn cached_value(&mut self, agent: usize, p: &Piece) -> ExactScalar {
        self.ledger.raw_eval += 1;
        self.instance.value(agent, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SocialGraph;

    fn q(n: i64, d: i64) -> ExactScalar {
        ExactScalar::ratio(n, d)
    }

    fn instance() -> Instance {
        let skew = Valuation::new(vec![q(0, 1), q(1, 2), q(1, 1)], vec![q(3, 2), q(1, 2)]).unwrap();
        Instance::new(vec![Valuation::uniform(), skew], SocialGraph::line(2)).unwrap()
    }

    #[test]
    fn eval_queries() {
        let inst = instance();
        let mut o = Oracle::new(&inst);
        assert_eq!(o.eval_query(0, &q(0, 1), &q(1, 2)).unwrap(), q(1, 2));
        assert_eq!(o.eval_query(1, &q(1, 4), &q(3, 4)).unwrap(), q(1, 2));
        assert_eq!(o.eval_query(1, &q(0, 1), &q(1, 1)).unwrap(), q(1, 1));
        assert_eq!(o.ledger().agent(0).eval, 1);
        assert_eq!(o.ledger().agent(1).eval, 2);
        assert!(matches!(
            o.eval_query(0, &q(1, 2), &q(1, 2)),
            Err(CakeError::BadRange { .. })
        ));
        assert!(o.eval_query(0, &q(1, 2), &q(3, 2)).is_err());
        assert_eq!(o.ledger().eval(), 3);
    }

    #[test]
    fn cut_queries() {
        let inst = instance();
        let mut o = Oracle::new(&inst);
        assert_eq!(o.cut_query(0, &q(1, 4), &q(1, 2)).unwrap(), q(3, 4));
        let y = o.cut_query(1, &q(0, 1), &q(1, 2)).unwrap();
        assert_eq!(y, q(1, 3));
        assert_eq!(o.eval_query(1, &q(0, 1), &y).unwrap(), q(1, 2));
        assert!(matches!(
            o.cut_query(0, &q(3, 4), &q(1, 2)),
            Err(CakeError::Unsatisfiable { .. })
        ));
        assert_eq!(o.ledger().cut(), 2);
    }

    #[test]
    fn piece_cuts_and_cache() {
        let inst = instance();
        let mut o = Oracle::new(&inst);
        let p = Piece::from_pairs([(q(0, 1), q(1, 4)), (q(1, 2), q(3, 4))]);
        let (pre, _) = o.cut_piece(0, &p, &q(3, 8)).unwrap();
        assert_eq!(pre, Piece::from_pairs([(q(0, 1), q(1, 4)), (q(1, 2), q(5, 8))]));
        let (pre, suf) = o.cut_piece(0, &p, &q(0, 1)).unwrap();
        assert!(pre.is_empty());
        assert_eq!(suf, p);
        let (pre, suf) = o.cut_piece(0, &p, &q(1, 2)).unwrap();
        assert_eq!(pre, p);
        assert!(suf.is_empty());
        assert_eq!(o.ledger().cut(), 3);
        assert_eq!(o.cached_value(0, &Piece::interval(q(0, 1), q(1, 3))), q(1, 3));
        assert_eq!(o.cached_value(0, &Piece::empty()), q(0, 1));
        assert_eq!(o.cached_value(1, &Piece::interval(q(1, 4), q(3, 4))), q(1, 2));
        assert_eq!(o.ledger().raw_eval(), 3);
        assert_eq!(o.ledger().eval(), 0);
    }

    #[test]
    fn ledger_json() {
        let inst = instance();
        let mut o = Oracle::new(&inst);
        o.charge_cuts(1, 2);
        o.charge_evals(0, 3);
        let s = serde_json::to_string(o.ledger()).unwrap();
        assert_eq!(
            s,
            r#"{"cut":2,"eval":3,"raw_eval":0,"per_agent":[{"cut":0,"eval":3},{"cut":2,"eval":0}]}"#
        );
        let back: QueryLedger = serde_json::from_str(&s).unwrap();
        assert_eq!(&back, o.ledger());
    }
}
