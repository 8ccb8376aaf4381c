//! Rule-based emotion classification over action-unit frames.
//!
//! Each frame is classified on its own. A rule fires when all of its
//! required action units reach the activation threshold and none of its
//! `absent` units do. When several rules fire, the one with the largest sum
//! of required-unit weights wins; remaining ties go to the earlier rule.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::au::{AuCode, Weight};
use crate::telemetry::SampleRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Emotion {
    Happiness,
    Sadness,
    Surprise,
    Fear,
    Anger,
    Disgust,
    Contempt,
    NoEmotion,
}

impl Emotion {
    pub const ALL: [Emotion; 8] = [
        Emotion::Happiness,
        Emotion::Sadness,
        Emotion::Surprise,
        Emotion::Fear,
        Emotion::Anger,
        Emotion::Disgust,
        Emotion::Contempt,
        Emotion::NoEmotion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Emotion::Happiness => "happiness",
            Emotion::Sadness => "sadness",
            Emotion::Surprise => "surprise",
            Emotion::Fear => "fear",
            Emotion::Anger => "anger",
            Emotion::Disgust => "disgust",
            Emotion::Contempt => "contempt",
            Emotion::NoEmotion => "no_emotion",
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Emotion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Emotion::ALL
            .iter()
            .copied()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| format!("unknown emotion `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valence {
    Good,
    Bad,
    None,
}

impl Valence {
    pub fn as_str(self) -> &'static str {
        match self {
            Valence::Good => "good",
            Valence::Bad => "bad",
            Valence::None => "none",
        }
    }
}

impl fmt::Display for Valence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Valence {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "good" => Ok(Valence::Good),
            "bad" => Ok(Valence::Bad),
            "none" => Ok(Valence::None),
            _ => Err(format!("unknown valence `{s}`")),
        }
    }
}

/// Emotion to valence assignment. `no_emotion` is always `none`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValenceMap {
    map: BTreeMap<Emotion, Valence>,
}

impl Default for ValenceMap {
    /// Happiness and contempt are good; anger, fear, disgust and sadness are bad.
    /// Surprise is placed with the bad group: in a fire drill it is a threat response.
    fn default() -> Self {
        let map = Emotion::ALL
            .iter()
            .map(|&e| {
                let v = match e {
                    Emotion::Happiness | Emotion::Contempt => Valence::Good,
                    Emotion::Anger | Emotion::Fear | Emotion::Disgust | Emotion::Sadness | Emotion::Surprise => {
                        Valence::Bad
                    }
                    Emotion::NoEmotion => Valence::None,
                };
                (e, v)
            })
            .collect();
        ValenceMap { map }
    }
}

impl ValenceMap {
    pub fn get(&self, label: Emotion) -> Valence {
        self.map[&label]
    }

    pub fn set(&mut self, label: Emotion, valence: Valence) -> Result<(), FacsError> {
        if label == Emotion::NoEmotion && valence != Valence::None {
            return Err(FacsError::NoEmotionValence);
        }
        self.map.insert(label, valence);
        Ok(())
    }
}

/// Valence under the default map.
pub fn valence_of(label: Emotion) -> Valence {
    ValenceMap::default().get(label)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub emotion: Emotion,
    pub required: BTreeSet<AuCode>,
    /// Supporting cues. Recorded with the rule and used by the simulator when
    /// synthesizing an expression; they do not affect classification.
    pub optional: BTreeSet<AuCode>,
    /// Units that must stay below threshold for the rule to fire.
    pub absent: BTreeSet<AuCode>,
}

impl Rule {
    pub fn new(emotion: Emotion, required: &[AuCode]) -> Rule {
        Rule {
            emotion,
            required: required.iter().copied().collect(),
            optional: BTreeSet::new(),
            absent: BTreeSet::new(),
        }
    }

    pub fn with_absent(mut self, absent: &[AuCode]) -> Rule {
        self.absent = absent.iter().copied().collect();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FacsError {
    #[error("activation threshold {0} outside (0, 1]")]
    Threshold(f64),
    #[error("no rule for {0}")]
    MissingEmotion(Emotion),
    #[error("no_emotion cannot have a rule")]
    NoEmotionRule,
    #[error("rule {index} ({emotion}) has an empty required set")]
    EmptyRequired { index: usize, emotion: Emotion },
    #[error("rule {index} ({emotion}) duplicates the required set of an earlier rule")]
    DuplicateRule { index: usize, emotion: Emotion },
    #[error("rule {index} ({emotion}) lists {au} as both required and absent")]
    Contradiction { index: usize, emotion: Emotion, au: AuCode },
    #[error("no_emotion must map to valence none")]
    NoEmotionValence,
    #[error("line {line}: {detail}")]
    Config { line: usize, detail: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleTable {
    rules: Vec<Rule>,
    threshold: f64,
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

impl Default for RuleTable {
    fn default() -> Self {
        use AuCode::*;
        let rules = vec![
            Rule::new(Emotion::Happiness, &[Au6, Au12]),
            Rule::new(Emotion::Sadness, &[Au1, Au4, Au15]),
            Rule::new(Emotion::Surprise, &[Au1, Au2, Au5, Au26]),
            Rule::new(Emotion::Fear, &[Au1, Au2, Au4, Au5, Au20]),
            Rule::new(Emotion::Anger, &[Au4, Au5, Au7, Au23]),
            Rule::new(Emotion::Disgust, &[Au9, Au10]),
            Rule::new(Emotion::Contempt, &[Au14L]).with_absent(&[Au14R]),
            Rule::new(Emotion::Contempt, &[Au14R]).with_absent(&[Au14L]),
        ];
        RuleTable::new(rules, DEFAULT_THRESHOLD).expect("default rule table is valid")
    }
}

impl RuleTable {
    pub fn new(rules: Vec<Rule>, threshold: f64) -> Result<RuleTable, FacsError> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(FacsError::Threshold(threshold));
        }
        for (index, rule) in rules.iter().enumerate() {
            if rule.emotion == Emotion::NoEmotion {
                return Err(FacsError::NoEmotionRule);
            }
            if rule.required.is_empty() {
                return Err(FacsError::EmptyRequired {
                    index,
                    emotion: rule.emotion,
                });
            }
            if let Some(&au) = rule.required.intersection(&rule.absent).next() {
                return Err(FacsError::Contradiction {
                    index,
                    emotion: rule.emotion,
                    au,
                });
            }
            if rules[..index]
                .iter()
                .any(|r| r.emotion == rule.emotion && r.required == rule.required)
            {
                return Err(FacsError::DuplicateRule {
                    index,
                    emotion: rule.emotion,
                });
            }
        }
        for emotion in Emotion::ALL {
            if emotion != Emotion::NoEmotion && !rules.iter().any(|r| r.emotion == emotion) {
                return Err(FacsError::MissingEmotion(emotion));
            }
        }
        Ok(RuleTable { rules, threshold })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Parses a rule-table config, returning the table and its valence map.
    ///
    /// ```text
    /// threshold=0.5
    /// happiness: required=[AU6,AU12] optional=[]
    /// contempt: required=[AU14L] absent=[AU14R]
    /// valence: surprise=none
    /// ```
    ///
    /// Valence lines override the default map; `#` starts a comment.
    pub fn parse_config(text: &str) -> Result<(RuleTable, ValenceMap), FacsError> {
        let mut threshold = DEFAULT_THRESHOLD;
        let mut rules = Vec::new();
        let mut valence = ValenceMap::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |detail: String| FacsError::Config { line, detail };
            let content = raw.split('#').next().unwrap().trim();
            if content.is_empty() {
                continue;
            }
            if let Some(value) = content.strip_prefix("threshold") {
                let value = value
                    .trim_start()
                    .strip_prefix('=')
                    .ok_or_else(|| err("expected threshold=<value>".into()))?;
                threshold = value
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("bad threshold `{}`", value.trim())))?;
                continue;
            }
            let (head, body) = content
                .split_once(':')
                .ok_or_else(|| err(format!("expected `<emotion>: required=[..]`, found `{content}`")))?;
            let head = head.trim();
            if head == "valence" {
                for pair in body.split_ascii_whitespace() {
                    let (e, v) = pair
                        .split_once('=')
                        .ok_or_else(|| err(format!("expected emotion=valence, found `{pair}`")))?;
                    let e: Emotion = e.parse().map_err(err)?;
                    let v: Valence = v.parse().map_err(err)?;
                    valence.set(e, v).map_err(|e| err(e.to_string()))?;
                }
                continue;
            }
            let emotion: Emotion = head.parse().map_err(err)?;
            let mut rule = Rule {
                emotion,
                required: BTreeSet::new(),
                optional: BTreeSet::new(),
                absent: BTreeSet::new(),
            };
            let mut saw_required = false;
            for (key, list) in parse_au_lists(body).map_err(err)? {
                match key {
                    "required" => {
                        saw_required = true;
                        rule.required = list;
                    }
                    "optional" => rule.optional = list,
                    "absent" => rule.absent = list,
                    other => return Err(err(format!("unknown rule field `{other}`"))),
                }
            }
            if !saw_required {
                return Err(err(format!("{emotion} rule has no required=[..] list")));
            }
            rules.push(rule);
        }
        Ok((RuleTable::new(rules, threshold)?, valence))
    }
}

fn parse_au_lists(body: &str) -> Result<Vec<(&str, BTreeSet<AuCode>)>, String> {
    let mut out = Vec::new();
    let mut rest = body.trim();
    while !rest.is_empty() {
        let (key, after) = rest
            .split_once('=')
            .ok_or_else(|| format!("expected key=[..], found `{rest}`"))?;
        let after = after.trim_start();
        let inner_start = after
            .strip_prefix('[')
            .ok_or_else(|| format!("expected `[` after {key}="))?;
        let (inner, tail) = inner_start
            .split_once(']')
            .ok_or_else(|| format!("unclosed list for {key}"))?;
        let mut set = BTreeSet::new();
        for code in inner.split(',').map(str::trim).filter(|c| !c.is_empty()) {
            let au: AuCode = code.parse().map_err(|e: crate::au::UnknownAu| e.to_string())?;
            set.insert(au);
        }
        out.push((key.trim(), set));
        rest = tail.trim_start();
    }
    Ok(out)
}

/// Action-unit weights at one instant. Missing units read as zero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AuFrame {
    pub weights: BTreeMap<AuCode, Weight>,
}

impl AuFrame {
    pub fn from_pairs(pairs: &[(AuCode, f64)]) -> AuFrame {
        AuFrame {
            weights: pairs
                .iter()
                .map(|&(au, w)| (au, Weight::new(w).expect("weight in [0, 1]")))
                .collect(),
        }
    }

    pub fn weight(&self, au: AuCode) -> f64 {
        self.weights.get(&au).map_or(0.0, |w| w.value())
    }
}

impl From<&SampleRecord> for AuFrame {
    fn from(sample: &SampleRecord) -> Self {
        AuFrame {
            weights: sample.aus.clone(),
        }
    }
}

/// Units whose weight is at least `threshold`.
pub fn active_aus(frame: &AuFrame, threshold: f64) -> BTreeSet<AuCode> {
    frame
        .weights
        .iter()
        .filter(|(_, w)| w.value() >= threshold)
        .map(|(&au, _)| au)
        .collect()
}

pub fn classify_frame(frame: &AuFrame, rules: &RuleTable) -> Emotion {
    let active = active_aus(frame, rules.threshold);
    let mut best: Option<(f64, Emotion)> = None;
    for rule in &rules.rules {
        let fires = rule.required.is_subset(&active) && rule.absent.is_disjoint(&active);
        if !fires {
            continue;
        }
        let score: f64 = rule.required.iter().map(|&au| frame.weight(au)).sum();
        if best.is_none_or(|(s, _)| score > s) {
            best = Some((score, rule.emotion));
        }
    }
    best.map_or(Emotion::NoEmotion, |(_, e)| e)
}
