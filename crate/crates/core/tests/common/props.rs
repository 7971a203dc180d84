//! Randomized checks of unification and subsumption against the reference
//! substitution-map unifier, shared by the unit-style tests and the
//! acceptance run. Each check returns the first violation it finds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ugparse::term::{is_variant, Side, Signature, Term, Unified};
use ugparse::{subsumes, unify, Category};

use super::{rename, shift, Subst};

pub struct Gen {
    pub sig: Signature,
    pub rng: ChaCha8Rng,
}

impl Gen {
    pub fn new(seed: u64) -> Gen {
        let mut sig = Signature::new(5);
        for a in ["a", "b", "c"] {
            sig.add_atom(a).unwrap();
        }
        for (f, n) in [("F", 2), ("G", 1), ("H", 3), ("K", 0)] {
            sig.add_functor(f, n).unwrap();
        }
        Gen {
            sig,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn term(&mut self, depth: usize) -> Term {
        let x: f64 = self.rng.gen();
        if depth == 0 || x < 0.35 {
            Term::Var(self.rng.gen_range(0..4))
        } else if x < 0.55 {
            Term::Atom(
                self.sig
                    .atom(["a", "b", "c"][self.rng.gen_range(0..3)])
                    .unwrap(),
            )
        } else {
            self.app(depth)
        }
    }

    fn app(&mut self, depth: usize) -> Term {
        let name = ["F", "G", "H", "K"][self.rng.gen_range(0..4)];
        let f = self.sig.functor(name).unwrap();
        let args = (0..self.sig.arity(f))
            .map(|_| self.term(depth - 1))
            .collect();
        Term::App(f, args)
    }

    pub fn category(&mut self) -> Category {
        loop {
            let t = self.app(3);
            if let Ok(c) = Category::from_term(&self.sig, t) {
                return c;
            }
        }
    }

    /// A random instance of `c`: each variable is kept, merged with another
    /// or replaced by a small term.
    pub fn instance(&mut self, c: &Category) -> Category {
        let mut s = Subst::new();
        for v in c.vars() {
            let x: f64 = self.rng.gen();
            let image = if x < 0.4 {
                Term::Var(v + 100)
            } else if x < 0.6 {
                Term::Var(100 + self.rng.gen_range(0..4))
            } else {
                self.term(1)
            };
            s.unify(&Term::Var(v), &image);
        }
        let t = rename(&s.resolve(c.term()), &mut Vec::new());
        Category::from_term(&self.sig, t).unwrap_or_else(|_| c.clone())
    }
}

/// Reference most general unifier, normalized, or `None`.
pub fn reference_mgu(a: &Category, b: &Category) -> Option<Term> {
    let off = a.var_bound();
    let mut s = Subst::new();
    if !s.unify(a.term(), &shift(b.term(), off)) {
        return None;
    }
    Some(rename(&s.resolve(a.term()), &mut Vec::new()))
}

/// Reference one-way matching.
pub fn reference_matches(general: &Term, specific: &Term) -> bool {
    fn go(g: &Term, s: &Term, bound: &mut Vec<(u32, Term)>) -> bool {
        match (g, s) {
            (Term::Var(x), _) => match bound.iter().find(|(v, _)| v == x) {
                Some((_, t)) => t == s,
                None => {
                    bound.push((*x, s.clone()));
                    true
                }
            },
            (Term::Atom(x), Term::Atom(y)) => x == y,
            (Term::App(f, xs), Term::App(h, ys)) => {
                f == h && xs.iter().zip(ys).all(|(x, y)| go(x, y, bound))
            }
            _ => false,
        }
    }
    go(general, specific, &mut Vec::new())
}

fn apply(t: &Term, side: Side, u: &Unified) -> Option<Term> {
    Some(match t {
        Term::Var(v) => u.substitution.get(side, *v).cloned()?,
        Term::Atom(a) => Term::Atom(*a),
        Term::App(f, args) => Term::App(
            *f,
            args.iter()
                .map(|x| apply(x, side, u))
                .collect::<Option<_>>()?,
        ),
    })
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

/// Soundness, generality, common instances and symmetry over `pairs`
/// random pairs, half of them built to be unifiable. Returns the number of
/// pairs that unified.
pub fn check_unification(seed: u64, pairs: usize) -> Result<usize, String> {
    let mut g = Gen::new(seed);
    let mut successes = 0;
    for _ in 0..pairs {
        let a = g.category();
        let b = if g.rng.gen_bool(0.5) {
            let i = g.instance(&a);
            g.instance(&i)
        } else {
            g.category()
        };
        let got = unify(&a, &b).unwrap();
        let expected = reference_mgu(&a, &b);
        ensure!(
            got.is_some() == expected.is_some(),
            "success disagrees on {a:?} / {b:?}"
        );
        let Some(u) = got else { continue };
        successes += 1;

        // Soundness: the reported substitution maps both inputs onto the result.
        ensure!(
            apply(a.term(), Side::Left, &u).as_ref() == Some(u.category.term()),
            "unsound left image for {a:?} / {b:?}"
        );
        ensure!(
            apply(b.term(), Side::Right, &u).as_ref() == Some(u.category.term()),
            "unsound right image for {a:?} / {b:?}"
        );
        // Generality: equal to the reference mgu up to renaming.
        ensure!(
            u.category.normalized().term() == &expected.unwrap(),
            "not most general on {a:?} / {b:?}"
        );
        ensure!(
            subsumes(&a, &u.category).unwrap() && subsumes(&b, &u.category).unwrap(),
            "result not below both inputs"
        );
        // Any further instance of the result is a common instance.
        let c = g.instance(&u.category);
        ensure!(
            subsumes(&u.category, &c).unwrap(),
            "instance not subsumed by the unifier"
        );
        ensure!(
            subsumes(&a, &c).unwrap() && subsumes(&b, &c).unwrap(),
            "instance not common to both inputs"
        );
        // Symmetry up to renaming.
        let v = unify(&b, &a).unwrap();
        ensure!(
            v.is_some_and(|v| is_variant(&u.category, &v.category).unwrap()),
            "asymmetric on {a:?} / {b:?}"
        );
    }
    ensure!(
        successes > pairs / 3,
        "only {successes} of {pairs} pairs unified"
    );
    Ok(successes)
}

/// Reflexivity, transitivity, agreement with reference matching and
/// mutual subsumption as variance over `triples` random triples.
pub fn check_subsumption(seed: u64, triples: usize) -> Result<(), String> {
    let mut g = Gen::new(seed);
    for _ in 0..triples {
        let a = g.category();
        ensure!(subsumes(&a, &a).unwrap(), "not reflexive on {a:?}");
        let b = g.instance(&a);
        let c = g.instance(&b);
        ensure!(
            subsumes(&a, &b).unwrap() && subsumes(&b, &c).unwrap(),
            "instance not subsumed"
        );
        ensure!(
            subsumes(&a, &c).unwrap(),
            "not transitive on {a:?} {b:?} {c:?}"
        );

        let (x, y, z) = (g.category(), g.category(), g.category());
        for (p, q) in [(&x, &y), (&y, &z), (&x, &z), (&a, &y), (&y, &a)] {
            ensure!(
                subsumes(p, q).unwrap() == reference_matches(p.term(), q.term()),
                "disagrees with matching on {p:?} {q:?}"
            );
        }
        if subsumes(&x, &y).unwrap() && subsumes(&y, &z).unwrap() {
            ensure!(
                subsumes(&x, &z).unwrap(),
                "not transitive on {x:?} {y:?} {z:?}"
            );
        }
        let mutual = subsumes(&a, &b).unwrap() && subsumes(&b, &a).unwrap();
        ensure!(
            mutual == is_variant(&a, &b).unwrap(),
            "mutual subsumption is not variance on {a:?} {b:?}"
        );
    }
    Ok(())
}
