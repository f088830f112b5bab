//! Deterministic reference components and the bundled presets.
//!
//! The presets register 3 CR / 8 TE / 3 EL / 3 RL / 1 joint linker for
//! `dbpedia` and 4 CR / 3 TE / 1 EL / 1 RL / 1 joint linker for `orkg`.

mod cr;
mod linking;
mod te;

use std::sync::Arc;

pub use cr::{CorefMode, CorefResolver};
pub use linking::{EntityLinker, JointLinker, RelationLinker, RelationMode, DEFAULT_MAX_NGRAM};
pub use te::{ClauseSplitExtractor, PatternExtractor, SvoExtractor, DEFAULT_MAX_GAP};

use crate::components::{ComponentError, ComponentMetadata, Registry, Task};
use crate::kg::MatchMode;
use crate::text::Lexicons;

const BOTH: &[&str] = &["dbpedia", "orkg"];
const DBPEDIA: &[&str] = &["dbpedia"];
const ORKG: &[&str] = &["orkg"];

/// Registers every builtin component, in the order pipelines enumerate them.
pub fn register_builtins(reg: &mut Registry, lex: Arc<Lexicons>) -> Result<(), ComponentError> {
    let meta = ComponentMetadata::builtin;

    let coref = |mode| CorefResolver::new(mode, lex.clone());
    reg.register_builtin(
        meta("cr_identity", "No coreference", Task::Cr, BOTH),
        coref(CorefMode::Identity),
    )?;
    reg.register_builtin(
        meta(
            "cr_pronoun_nearest",
            "Nearest-antecedent pronoun resolver",
            Task::Cr,
            BOTH,
        ),
        coref(CorefMode::Nearest),
    )?;
    reg.register_builtin(
        meta(
            "cr_pronoun_prev_sentence",
            "Previous-sentence pronoun resolver",
            Task::Cr,
            BOTH,
        ),
        coref(CorefMode::PreviousSentence),
    )?;
    reg.register_builtin(
        meta(
            "cr_nearest_demonstrative",
            "Pronoun and demonstrative resolver",
            Task::Cr,
            ORKG,
        ),
        coref(CorefMode::NearestWithDemonstratives),
    )?;

    let svo = |aux, prep| {
        let mut s = SvoExtractor::new(lex.clone());
        s.extend_auxiliaries = aux;
        s.extend_prepositions = prep;
        s
    };
    reg.register_builtin(
        meta("te_svo", "Subject-verb-object", Task::Te, BOTH),
        svo(true, true),
    )?;
    reg.register_builtin(
        meta(
            "te_svo_no_aux",
            "Subject-verb-object without auxiliary groups",
            Task::Te,
            DBPEDIA,
        ),
        svo(false, true),
    )?;
    reg.register_builtin(
        meta(
            "te_svo_aux_no_prep",
            "Subject-verb-object without prepositions",
            Task::Te,
            DBPEDIA,
        ),
        svo(true, false),
    )?;
    reg.register_builtin(
        meta(
            "te_clause_split",
            "Clause splitter with appositives",
            Task::Te,
            BOTH,
        ),
        ClauseSplitExtractor::new(lex.clone()),
    )?;
    let mut no_appos = ClauseSplitExtractor::new(lex.clone());
    no_appos.appositives = false;
    reg.register_builtin(
        meta(
            "te_clause_split_no_appos",
            "Clause splitter",
            Task::Te,
            DBPEDIA,
        ),
        no_appos,
    )?;
    let pattern = |gap| PatternExtractor::new(lex.clone(), gap);
    reg.register_builtin(
        meta(
            "te_verb_prep_pattern",
            "Verb-preposition pattern",
            Task::Te,
            BOTH,
        ),
        pattern(DEFAULT_MAX_GAP),
    )?;
    reg.register_builtin(
        meta(
            "te_verb_prep_pattern_gap0",
            "Adjacent verb-preposition pattern",
            Task::Te,
            DBPEDIA,
        ),
        pattern(0),
    )?;
    reg.register_builtin(
        meta(
            "te_verb_prep_pattern_gap2",
            "Short-gap verb-preposition pattern",
            Task::Te,
            DBPEDIA,
        ),
        pattern(2),
    )?;

    reg.register_builtin(
        meta("el_exact", "Exact label entity linker", Task::El, DBPEDIA),
        EntityLinker::new(MatchMode::Exact),
    )?;
    reg.register_builtin(
        meta(
            "el_case_insensitive",
            "Case-insensitive entity linker",
            Task::El,
            BOTH,
        ),
        EntityLinker::new(MatchMode::CaseInsensitive),
    )?;
    reg.register_builtin(
        meta("el_fuzzy", "Fuzzy entity linker", Task::El, DBPEDIA),
        EntityLinker::new(MatchMode::Fuzzy),
    )?;

    let rl = |mode| RelationLinker::new(mode, lex.clone());
    reg.register_builtin(
        meta(
            "rl_dictionary",
            "Dictionary relation linker",
            Task::Rl,
            BOTH,
        ),
        rl(RelationMode::Dictionary),
    )?;
    reg.register_builtin(
        meta("rl_fuzzy", "Fuzzy relation linker", Task::Rl, DBPEDIA),
        rl(RelationMode::Fuzzy),
    )?;
    reg.register_builtin(
        meta(
            "rl_strip_aux",
            "Auxiliary-stripping relation linker",
            Task::Rl,
            DBPEDIA,
        ),
        rl(RelationMode::StripAuxiliaries),
    )?;

    reg.register_builtin(
        meta(
            "elrl_joint",
            "Joint n-gram entity and relation linker",
            Task::ElRl,
            BOTH,
        ),
        JointLinker::new(lex),
    )?;
    Ok(())
}

/// A registry holding every builtin component with the bundled lexicons.
pub fn default_registry() -> Registry {
    registry_with(Arc::new(Lexicons::default()))
}

pub fn registry_with(lex: Arc<Lexicons>) -> Registry {
    let mut reg = Registry::new();
    register_builtins(&mut reg, lex).expect("builtin ids are unique and valid");
    reg
}
