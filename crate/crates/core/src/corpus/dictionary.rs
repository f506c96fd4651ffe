use std::collections::HashMap;

use sha2::{Digest, Sha256};

use super::{CorpusError, TermId};

/// Bijection between term strings and dense [`TermId`]s.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermDictionary {
    terms: Vec<String>,
    index: HashMap<String, TermId>,
}

impl TermDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: Vec<String>) -> Result<Self, CorpusError> {
        let mut index = HashMap::with_capacity(terms.len());
        for (i, term) in terms.iter().enumerate() {
            if index.insert(term.clone(), TermId(i as u32)).is_some() {
                return Err(CorpusError::DuplicateTerm(term.clone()));
            }
        }
        Ok(Self { terms, index })
    }

    pub fn intern(&mut self, term: &str) -> TermId {
        if let Some(&id) = self.index.get(term) {
            return id;
        }
        let id = TermId(self.terms.len() as u32);
        self.terms.push(term.to_string());
        self.index.insert(term.to_string(), id);
        id
    }

    pub fn get(&self, term: &str) -> Option<TermId> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.terms[id.index()]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Returns a dictionary with terms in lexicographic order and the old→new id map.
    pub fn sorted(&self) -> (TermDictionary, Vec<TermId>) {
        let mut order: Vec<usize> = (0..self.terms.len()).collect();
        order.sort_unstable_by(|&a, &b| self.terms[a].cmp(&self.terms[b]));
        let mut remap = vec![TermId(0); self.terms.len()];
        let mut terms = Vec::with_capacity(self.terms.len());
        for (new, &old) in order.iter().enumerate() {
            remap[old] = TermId(new as u32);
            terms.push(self.terms[old].clone());
        }
        let dict = TermDictionary::from_terms(terms).expect("terms were already distinct");
        (dict, remap)
    }

    /// Hex SHA-256 over the terms in id order, newline-separated.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for term in &self.terms {
            hasher.update(term.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }
}
