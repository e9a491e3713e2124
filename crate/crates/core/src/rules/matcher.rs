//! Backtracking join over pattern atoms.
//!
//! At each step the matcher picks the unprocessed atom with the fewest
//! candidate triples under the current binding, so bound focus variables
//! drive the search. Filters run as soon as all their variables are bound.
//! `type` atoms are matched under the ontology's subclass closure.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use super::{render_message, Binding, Filter, FilterOp, Match, PatternAtom, PatternTerm, Rule};
use crate::graph::TripleSource;
use crate::ontology::Ontology;
use crate::term::Term;
use crate::vocab;

pub struct Matcher<'a, S: TripleSource + ?Sized> {
    source: &'a S,
    ontology: &'a Ontology,
    type_pred: Term,
    closure: bool,
}

impl<'a, S: TripleSource + ?Sized> Matcher<'a, S> {
    pub fn new(source: &'a S, ontology: &'a Ontology) -> Self {
        Matcher { source, ontology, type_pred: Term::iri(vocab::TYPE), closure: ontology.has_hierarchy() }
    }

    /// Every distinct total binding extending `seed` under which all atoms
    /// hold and all filters pass, in ascending binding order.
    pub fn bindings(&self, rule: &Rule, seed: &Binding) -> Vec<Binding> {
        let mut out = BTreeSet::new();
        let mut remaining: Vec<&PatternAtom> = rule.atoms.iter().collect();
        let mut binding = seed.clone();
        if self.filters_ok(&rule.filters, &binding) {
            self.solve(&mut remaining, &rule.filters, &mut binding, &mut out);
        }
        out.into_iter().collect()
    }

    pub fn evaluate(&self, rule: &Rule, seed: &Binding) -> Vec<Match> {
        self.bindings(rule, seed)
            .into_iter()
            .map(|binding| {
                let message = render_message(&rule.message, &binding, self.source)
                    .unwrap_or_else(|_| rule.message.clone());
                Match { rule_id: rule.id.clone(), binding, message }
            })
            .collect()
    }

    fn resolve<'b>(&self, t: &'b PatternTerm, binding: &'b Binding) -> Option<&'b Term> {
        match t {
            PatternTerm::Const(c) => Some(c),
            PatternTerm::Var(v) => binding.get(v),
        }
    }

    fn is_closure_atom(&self, atom: &PatternAtom) -> bool {
        self.closure && atom.predicate == self.type_pred
    }

    fn estimate(&self, atom: &PatternAtom, binding: &Binding) -> usize {
        let s = self.resolve(&atom.subject, binding);
        let o = self.resolve(&atom.object, binding);
        if self.is_closure_atom(atom) {
            if let Some(class) = o.and_then(Term::as_id) {
                return self
                    .ontology
                    .descendants(class)
                    .iter()
                    .map(|d| self.source.count_hint(s, Some(&atom.predicate), Some(&Term::iri(d))))
                    .sum();
            }
        }
        self.source.count_hint(s, Some(&atom.predicate), o)
    }

    /// Candidate (subject, object) pairs for an atom under the binding.
    fn candidates(&self, atom: &PatternAtom, binding: &Binding) -> Vec<(Term, Term)> {
        let s = self.resolve(&atom.subject, binding);
        let o = self.resolve(&atom.object, binding);
        if !self.is_closure_atom(atom) {
            return self
                .source
                .matching(s, Some(&atom.predicate), o)
                .into_iter()
                .map(|t| (t.subject().clone(), t.object().clone()))
                .collect();
        }
        match o {
            Some(class) if class.is_id() => {
                let name = class.as_id().unwrap_or_default();
                let mut out = BTreeSet::new();
                for d in self.ontology.descendants(name) {
                    for t in self.source.matching(s, Some(&atom.predicate), Some(&Term::iri(&d))) {
                        out.insert((t.subject().clone(), class.clone()));
                    }
                }
                out.into_iter().collect()
            }
            Some(_) => self
                .source
                .matching(s, Some(&atom.predicate), o)
                .into_iter()
                .map(|t| (t.subject().clone(), t.object().clone()))
                .collect(),
            None => {
                let mut out = BTreeSet::new();
                for t in self.source.matching(s, Some(&atom.predicate), None) {
                    match t.object().as_id() {
                        Some(d) => {
                            for a in self.ontology.ancestors(d) {
                                if let Ok(term) = Term::id(&a) {
                                    out.insert((t.subject().clone(), term));
                                }
                            }
                        }
                        None => {
                            out.insert((t.subject().clone(), t.object().clone()));
                        }
                    }
                }
                out.into_iter().collect()
            }
        }
    }

    fn solve(
        &self,
        remaining: &mut Vec<&PatternAtom>,
        filters: &[Filter],
        binding: &mut Binding,
        out: &mut BTreeSet<Binding>,
    ) {
        if remaining.is_empty() {
            if filters.iter().all(|f| self.filter_holds(f, binding) == Some(true)) {
                out.insert(binding.clone());
            }
            return;
        }
        let (idx, _) = remaining
            .iter()
            .enumerate()
            .map(|(i, a)| (i, self.estimate(a, binding)))
            .min_by_key(|&(i, n)| (n, i))
            .expect("non-empty");
        let atom = remaining.remove(idx);
        if self.estimate(atom, binding) > 0 {
            for (s, o) in self.candidates(atom, binding) {
                let mut added = Vec::new();
                if bind(&atom.subject, s, binding, &mut added)
                    && bind(&atom.object, o, binding, &mut added)
                    && self.filters_ok(filters, binding)
                {
                    self.solve(remaining, filters, binding, out);
                }
                for v in added {
                    binding.remove(&v);
                }
            }
        }
        remaining.insert(idx, atom);
    }

    /// False only when some fully bound filter fails.
    fn filters_ok(&self, filters: &[Filter], binding: &Binding) -> bool {
        filters.iter().all(|f| self.filter_holds(f, binding) != Some(false))
    }

    /// `None` while a filter variable is still unbound.
    fn filter_holds(&self, f: &Filter, binding: &Binding) -> Option<bool> {
        let left = binding.get(&f.left)?;
        let right = self.resolve(&f.right, binding)?;
        Some(match f.op {
            FilterOp::Eq => left == right,
            FilterOp::Neq => left != right,
            FilterOp::ScaleGreaterEq | FilterOp::ScaleLess => {
                let Some(scale) = f.scale.as_deref().and_then(|s| self.ontology.scale(s)) else {
                    return Some(false);
                };
                match (scale.compare(left, right), f.op) {
                    (Ok(ord), FilterOp::ScaleGreaterEq) => ord != Ordering::Less,
                    (Ok(ord), _) => ord == Ordering::Less,
                    (Err(_), _) => false,
                }
            }
            FilterOp::NumGreaterEq | FilterOp::NumLess => match (left.as_f64(), right.as_f64()) {
                (Some(a), Some(b)) if f.op == FilterOp::NumGreaterEq => a >= b,
                (Some(a), Some(b)) => a < b,
                _ => false,
            },
        })
    }
}

/// Binds or checks one pattern position; records newly bound variables.
fn bind(pt: &PatternTerm, value: Term, binding: &mut Binding, added: &mut Vec<super::Variable>) -> bool {
    match pt {
        PatternTerm::Const(c) => *c == value,
        PatternTerm::Var(v) => match binding.get(v) {
            Some(existing) => *existing == value,
            None => {
                binding.insert(v.clone(), value);
                added.push(v.clone());
                true
            }
        },
    }
}

/// Evaluates one rule against a triple source. See [`Matcher::evaluate`].
pub fn evaluate<S: TripleSource + ?Sized>(
    rule: &Rule,
    source: &S,
    ontology: &Ontology,
    seed: &Binding,
) -> Vec<Match> {
    Matcher::new(source, ontology).evaluate(rule, seed)
}
