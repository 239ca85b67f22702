//! Independent reference computations used by the integration and
//! acceptance tests. Nothing here calls into the library's algorithms.

#![allow(dead_code)]

use std::collections::HashMap;

/// Crop side straight from the definition: mean of `(W + H) / 8` over
/// frames with a face box, times `scale`.
pub fn crop_side_reference(faces: &[[u32; 4]], scale: f64) -> Option<f64> {
    if faces.is_empty() {
        return None;
    }
    let mut acc = 0.0;
    for f in faces {
        let w = f64::from(f[2]) - f64::from(f[0]);
        let h = f64::from(f[3]) - f64::from(f[1]);
        acc += (w + h) / 8.0;
    }
    Some(acc / faces.len() as f64 * scale)
}

/// For every frame, the lip midpoint of the nearest detected frame found
/// by scanning all detections; ties go to the earlier frame.
pub fn nearest_centers_reference(lips: &[Option<[u32; 4]>]) -> Vec<(f64, f64)> {
    let detected: Vec<(usize, [u32; 4])> = lips.iter().enumerate().filter_map(|(i, l)| l.map(|b| (i, b))).collect();
    (0..lips.len())
        .map(|i| {
            let mut best: Option<(usize, [u32; 4])> = None;
            for &(k, b) in &detected {
                let d = k.abs_diff(i);
                match best {
                    Some((bk, _)) if bk.abs_diff(i) <= d => {}
                    _ => best = Some((k, b)),
                }
            }
            let b = best.expect("at least one detection").1;
            (
                (f64::from(b[0]) + f64::from(b[2])) / 2.0,
                (f64::from(b[1]) + f64::from(b[3])) / 2.0,
            )
        })
        .collect()
}

/// Top-down memoised Levenshtein distance (unit costs).
pub fn edit_distance_reference<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(a: &[T], b: &[T], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i] == b[j] {
            go(a, b, i + 1, j + 1, memo)
        } else {
            1 + go(a, b, i + 1, j + 1, memo)
                .min(go(a, b, i + 1, j, memo))
                .min(go(a, b, i, j + 1, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

/// Enumerates every alignment of `a` against `b` and returns the minimum
/// number of (substitutions + deletions + insertions).
pub fn edit_distance_exhaustive<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ra)), Some((y, rb))) => {
            let diag = usize::from(x != y) + edit_distance_exhaustive(ra, rb);
            let del = 1 + edit_distance_exhaustive(ra, b);
            let ins = 1 + edit_distance_exhaustive(a, rb);
            diag.min(del).min(ins)
        }
    }
}

/// Exhaustive minimum cost of aligning `tokens` into `slots`, where each
/// slot is the set of tokens it already holds: 0 for a token already in
/// its slot, 1 for any other pairing, skipped slot or slot-less token.
pub fn wtn_cost_exhaustive(slots: &[Vec<String>], tokens: &[String]) -> u32 {
    match (slots.split_first(), tokens.split_first()) {
        (None, _) => tokens.len() as u32,
        (_, None) => slots.len() as u32,
        (Some((s, rs)), Some((t, rt))) => {
            let diag = u32::from(!s.contains(t)) + wtn_cost_exhaustive(rs, rt);
            let skip = 1 + wtn_cost_exhaustive(rs, tokens);
            let new_slot = 1 + wtn_cost_exhaustive(slots, rt);
            diag.min(skip).min(new_slot)
        }
    }
}

/// All sequences over `alphabet` with length `0..=max_len`.
pub fn all_sequences(alphabet: &[&str], max_len: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Vec<String>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for seq in &frontier {
            for sym in alphabet {
                let mut s = seq.clone();
                s.push((*sym).to_owned());
                next.push(s);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// `(a + b + c + d + 2) / 4` block averaging, per channel.
pub fn halve_reference(src: &image::RgbImage) -> image::RgbImage {
    let (w, h) = src.dimensions();
    image::RgbImage::from_fn(w / 2, h / 2, |x, y| {
        let mut px = [0u8; 3];
        for (c, v) in px.iter_mut().enumerate() {
            let s: u32 = [(0, 0), (1, 0), (0, 1), (1, 1)]
                .iter()
                .map(|&(dx, dy)| u32::from(src.get_pixel(2 * x + dx, 2 * y + dy)[c]))
                .sum();
            *v = ((s + 2) / 4) as u8;
        }
        image::Rgb(px)
    })
}
