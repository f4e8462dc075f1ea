//! Verification of externally generated action plans against natural-language
//! rules.
//!
//! The pipeline has three legs:
//!
//! 1. **Symbolic**: plans written in a small indentation-based language are
//!    parsed ([`plan_lang`]), compiled into finite-state automata ([`l2a`]),
//!    and model-checked against temporal-logic specifications ([`ltl`]) over
//!    a transition-system environment model ([`automata`]).
//! 2. **Learned**: a language-model interpreter predicts compliance and
//!    explains itself ([`oracle`]); a small projector network maps the text
//!    embedding of plan + rationale into a latent space where the
//!    interpreter's agreement with the model checker is linearly separable
//!    ([`projector`]).
//! 3. **Calibrated**: nearest-centroid distances in the latent space yield a
//!    probabilistic guarantee that the verdict is correct ([`calibration`]),
//!    which in turn drives fine-tuning dataset exports ([`refine`]).
//!
//! See the crate `examples/` directory for one runnable example per
//! capability, and the `repv` binary for the batch CLI.

pub mod automata;
pub mod calibration;
pub mod fixtures;
pub mod l2a;
pub mod ltl;
pub mod metrics;
pub mod oracle;
pub mod pipeline;
pub mod plan_lang;
pub mod projector;
pub mod refine;
