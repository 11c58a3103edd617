//! Generated corpora with a planted three-hop evidence chain.
//!
//! The chain mirrors a classic bridge question: passage A says a cathedral
//! is dedicated to a saint, passage B (the bridge) places the saint's
//! basilica in a city, and passage C names the city's governor. The saint
//! and the basilica are distinct entities joined only by a synonymy edge.
//! The bridge shares a couple of question words but ranks below the
//! distractors on its own, so it only surfaces when a reasoning path runs
//! through it. Distractor passages share question words but lead nowhere.
//! Texts are telegraphic word lists so a bag-of-tokens embedder sees only
//! content words; with the hashed mock, use a wide dimension (4096) to keep
//! the random names from colliding with question words.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusPassage;
use crate::extraction::{ExtractedProposition, ExtractionRecord};

pub const PASSAGE_COUNT: usize = 20;
const CATHEDRAL_DISTRACTORS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedChain {
    pub passages: Vec<CorpusPassage>,
    pub records: Vec<ExtractionRecord>,
    pub query: String,
    /// Chain passages in hop order: head, bridge, answer.
    pub gold: Vec<String>,
    pub bridge: String,
    pub answer: String,
}

struct Words {
    rng: ChaCha8Rng,
    used: HashSet<String>,
}

impl Words {
    const ONSETS: [&'static str; 14] = [
        "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
    ];
    const NUCLEI: [&'static str; 5] = ["a", "e", "i", "o", "u"];
    const CODAS: [&'static str; 6] = ["", "n", "r", "l", "s", "th"];

    fn fresh(&mut self) -> String {
        loop {
            let syllables = self.rng.random_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(Self::ONSETS[self.rng.random_range(0..Self::ONSETS.len())]);
                w.push_str(Self::NUCLEI[self.rng.random_range(0..Self::NUCLEI.len())]);
            }
            w.push_str(Self::CODAS[self.rng.random_range(0..Self::CODAS.len())]);
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }

    fn name(&mut self) -> String {
        let w = self.fresh();
        let mut c = w.chars();
        match c.next() {
            Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
            None => w,
        }
    }
}

struct Builder {
    passages: Vec<CorpusPassage>,
    records: Vec<ExtractionRecord>,
}

impl Builder {
    fn add(&mut self, id: &str, props: Vec<(String, Vec<String>)>) {
        let text = props
            .iter()
            .map(|(t, _)| format!("{t}."))
            .collect::<Vec<_>>()
            .join(" ");
        let mut entities: Vec<String> = Vec::new();
        for (_, es) in &props {
            for e in es {
                if !entities.contains(e) {
                    entities.push(e.clone());
                }
            }
        }
        self.passages.push(CorpusPassage {
            id: id.to_string(),
            title: None,
            text,
        });
        self.records.push(ExtractionRecord {
            passage_id: id.to_string(),
            entities,
            propositions: props
                .into_iter()
                .map(|(text, entities)| ExtractedProposition { text, entities })
                .collect(),
            provenance: None,
        });
    }
}

fn prop(text: String, entities: &[&String]) -> (String, Vec<String>) {
    (text, entities.iter().map(|s| s.to_string()).collect())
}

/// Generates one planted-chain instance; the same seed always yields the
/// same corpus.
pub fn planted_chain(seed: u64) -> PlantedChain {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<String> = (0..PASSAGE_COUNT).map(|i| format!("doc{i:02}")).collect();
    ids.shuffle(&mut rng);
    let mut w = Words {
        rng,
        used: HashSet::new(),
    };
    let mut b = Builder {
        passages: Vec::new(),
        records: Vec::new(),
    };

    // The chain.
    let cathedral = format!("{} Cathedral", w.name());
    let saint = format!("Saint {}", w.name());
    let basilica = format!("{saint} Basilica");
    let city = format!("{} City", w.name());
    let governor = format!("{} {}", w.name(), w.name());
    let year = format!("{}", 1900 + w.rng.random_range(0..100));

    b.add(
        &ids[0],
        vec![prop(format!("{cathedral} dedicated {saint}"), &[&cathedral, &saint])],
    );
    b.add(
        &ids[1],
        vec![prop(format!("{basilica} located {city}"), &[&basilica, &city])],
    );
    b.add(
        &ids[2],
        vec![prop(
            format!("{governor} governor {city} died {year}"),
            &[&governor, &city],
        )],
    );

    // A second passage about the head cathedral: one hop from the seeds,
    // off the chain.
    let architect = format!("{} {}", w.name(), w.name());
    let rebuilt = format!("{}", 1700 + w.rng.random_range(0..100));
    b.add(
        &ids[3],
        vec![prop(
            format!("{cathedral} rebuilt {rebuilt} architect {architect}"),
            &[&cathedral, &architect],
        )],
    );

    // Distractors echo the question's wording around unrelated entities.
    let mut next = 4;
    for _ in 0..CATHEDRAL_DISTRACTORS {
        let other = format!("{} Cathedral", w.name());
        let place = w.name();
        let square = format!("{} Square", w.name());
        let patron = format!("Saint {}", w.name());
        b.add(
            &ids[next],
            vec![
                prop(format!("{other} dedicated {patron}"), &[&other, &patron]),
                prop(
                    format!("{other} stands {square} {place}"),
                    &[&other, &square, &place],
                ),
            ],
        );
        next += 1;
    }
    for _ in 0..3 {
        let person = format!("{} {}", w.name(), w.name());
        let region = format!("{} City", w.name());
        let when = format!("{}", 1800 + w.rng.random_range(0..200));
        b.add(
            &ids[next],
            vec![
                prop(
                    format!("{person} governor {region} appointed {when}"),
                    &[&person, &region, &when],
                ),
                prop(
                    format!("{person} successor named {region}"),
                    &[&person, &region],
                ),
            ],
        );
        next += 1;
    }

    // Filler: small clusters of unrelated facts.
    let mut shared: Vec<String> = Vec::new();
    while next < PASSAGE_COUNT {
        let a = w.name();
        let c = if !shared.is_empty() && w.rng.random_bool(0.5) {
            shared[w.rng.random_range(0..shared.len())].clone()
        } else {
            w.name()
        };
        let verb = w.fresh();
        let noun = w.fresh();
        let d = w.name();
        b.add(
            &ids[next],
            vec![
                prop(format!("{a} {verb} {c}"), &[&a, &c]),
                prop(format!("{a} {noun} {d}"), &[&a, &d]),
            ],
        );
        shared.push(d);
        next += 1;
    }

    let query = format!("governor city basilica {cathedral} dedicated");
    b.passages.sort_by(|x, y| x.id.cmp(&y.id));
    b.records.sort_by(|x, y| x.passage_id.cmp(&y.passage_id));
    PlantedChain {
        passages: b.passages,
        records: b.records,
        query,
        gold: ids[..3].to_vec(),
        bridge: ids[1].clone(),
        answer: governor,
    }
}
