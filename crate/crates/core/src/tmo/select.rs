use std::fmt::Write as _;

use super::{drago, mertens::fuse_images, reinhard_global, tmqi, MertensParams, TmqiParams, TmqiScore, ToneMap};
use crate::camera::{fixed_stack, Crf};
use crate::error::Result;
use crate::image::RadianceMap;

pub const SCORE_CSV_HEADER: &str = "image,operator,S,N,Q";

/// A tone-mapping operator together with its parameters.
#[derive(Debug, Clone)]
pub enum Operator {
    Reinhard { key: f64, white: Option<f64> },
    Drago { bias: f64 },
    /// Fuses a fixed exposure stack synthesized from the map through `crf`.
    Mertens { crf: Crf, params: MertensParams },
}

impl Operator {
    pub fn name(&self) -> &'static str {
        match self {
            Operator::Reinhard { .. } => "reinhard",
            Operator::Drago { .. } => "drago",
            Operator::Mertens { .. } => "mertens",
        }
    }

    pub fn apply(&self, map: &RadianceMap) -> ToneMap {
        match self {
            Operator::Reinhard { key, white } => reinhard_global(map, *key, *white),
            Operator::Drago { bias } => drago(map, *bias, None),
            Operator::Mertens { crf, params } => fuse_images(fixed_stack(map, crf).images(), params),
        }
    }

    /// Reinhard (key 0.18), Drago (bias 0.85) and Mertens through `crf`.
    pub fn default_set(crf: &Crf) -> Vec<Operator> {
        vec![
            Operator::Reinhard { key: 0.18, white: None },
            Operator::Drago { bias: 0.85 },
            Operator::Mertens {
                crf: crf.clone(),
                params: MertensParams::default(),
            },
        ]
    }
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub tone_map: ToneMap,
    pub index: usize,
    pub name: &'static str,
    pub score: TmqiScore,
    /// Scores of every operator, in list order.
    pub scores: Vec<TmqiScore>,
}

/// Applies every operator, scores each with TMQI and keeps the highest Q.
/// Ties go to the operator that appears first.
pub fn select_best_tmo(map: &RadianceMap, operators: &[Operator], params: &TmqiParams) -> Result<Selection> {
    assert!(!operators.is_empty(), "select_best_tmo needs at least one operator");
    let results: Vec<Result<(ToneMap, TmqiScore)>> = std::thread::scope(|s| {
        let handles: Vec<_> = operators
            .iter()
            .map(|op| {
                s.spawn(move || {
                    let tm = op.apply(map);
                    let score = tmqi(map, &tm, params)?;
                    Ok((tm, score))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("operator thread panicked")).collect()
    });

    let mut best: Option<(usize, ToneMap)> = None;
    let mut scores: Vec<TmqiScore> = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        let (tm, score) = r?;
        let better = match &best {
            None => true,
            Some((b, _)) => score.q > scores[*b].q,
        };
        scores.push(score);
        if better {
            best = Some((i, tm));
        }
    }
    let (index, tone_map) = best.expect("at least one operator");
    Ok(Selection {
        tone_map,
        index,
        name: operators[index].name(),
        score: scores[index],
        scores,
    })
}

/// One CSV row per operator score, preceded by the header.
pub fn score_csv(rows: &[(String, &'static str, TmqiScore)]) -> String {
    let mut out = String::from(SCORE_CSV_HEADER);
    out.push('\n');
    for (image, op, s) in rows {
        let _ = writeln!(out, "{image},{op},{:.6},{:.6},{:.6}", s.s, s.n, s.q);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::gamma_crf;

    fn scene(seed: usize) -> RadianceMap {
        RadianceMap::from_fn(32, 24, |x, y| {
            let v = 0.002 + ((x * (3 + seed) + y * 5) % 13) as f32 * 0.15 + if x > 16 { 3.0 } else { 0.0 };
            [v, v * 0.7, v * 1.2]
        })
    }

    #[test]
    fn single_operator_is_returned() {
        let ops = [Operator::Drago { bias: 0.85 }];
        let sel = select_best_tmo(&scene(0), &ops, &TmqiParams::default()).unwrap();
        assert_eq!((sel.index, sel.name), (0, "drago"));
    }

    #[test]
    fn selection_is_argmax_of_rescored_operators() {
        let crf = gamma_crf(2.2).unwrap();
        let ops = Operator::default_set(&crf);
        let map = scene(1);
        let sel = select_best_tmo(&map, &ops, &TmqiParams::default()).unwrap();
        let rescored: Vec<f64> = ops.iter().map(|o| tmqi(&map, &o.apply(&map), &TmqiParams::default()).unwrap().q).collect();
        let max = rescored.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(sel.score.q, max);
        assert_eq!(rescored.iter().position(|&q| q == max), Some(sel.index));
    }

    #[test]
    fn ties_go_to_list_order() {
        let ops = [Operator::Drago { bias: 0.85 }, Operator::Drago { bias: 0.85 }];
        assert_eq!(select_best_tmo(&scene(2), &ops, &TmqiParams::default()).unwrap().index, 0);
    }

    #[test]
    fn csv_layout() {
        let s = TmqiScore { s: 1.0, n: 0.5, q: 0.75 };
        let csv = score_csv(&[("a.hdr".into(), "drago", s)]);
        assert_eq!(csv, "image,operator,S,N,Q\na.hdr,drago,1.000000,0.500000,0.750000\n");
    }
}
