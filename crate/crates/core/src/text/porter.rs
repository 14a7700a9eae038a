//! The original Porter (1980) suffix-stripping algorithm for English.
//!
//! Operates on lowercase ASCII words; callers are expected to pass only such
//! words. Words of any length are stemmed (no short-word guard).

use alloc::string::String;
use alloc::vec::Vec;

struct Word {
    b: Vec<u8>,
}

type Cond = fn(&Word, usize) -> bool;

impl Word {
    fn is_consonant(&self, i: usize) -> bool {
        match self.b[i] {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => i == 0 || !self.is_consonant(i - 1),
            _ => true,
        }
    }

    /// Number of VC sequences in the first `len` letters.
    fn measure(&self, len: usize) -> usize {
        let mut m = 0;
        let mut i = 0;
        while i < len && self.is_consonant(i) {
            i += 1;
        }
        loop {
            while i < len && !self.is_consonant(i) {
                i += 1;
            }
            if i >= len {
                return m;
            }
            while i < len && self.is_consonant(i) {
                i += 1;
            }
            m += 1;
        }
    }

    fn has_vowel(&self, len: usize) -> bool {
        (0..len).any(|i| !self.is_consonant(i))
    }

    fn ends_double_consonant(&self, len: usize) -> bool {
        len >= 2 && self.b[len - 1] == self.b[len - 2] && self.is_consonant(len - 1)
    }

    /// consonant-vowel-consonant ending where the last consonant is not w, x or y.
    fn ends_cvc(&self, len: usize) -> bool {
        len >= 3
            && self.is_consonant(len - 3)
            && !self.is_consonant(len - 2)
            && self.is_consonant(len - 1)
            && !matches!(self.b[len - 1], b'w' | b'x' | b'y')
    }

    fn ends_with(&self, suffix: &str) -> bool {
        self.b.ends_with(suffix.as_bytes())
    }

    fn replace(&mut self, stem_len: usize, with: &str) {
        self.b.truncate(stem_len);
        self.b.extend_from_slice(with.as_bytes());
    }

    /// Applies the first rule whose suffix matches, if its condition holds on
    /// the remaining stem. Later rules are not tried once a suffix matched.
    fn apply_rules(&mut self, rules: &[(&str, &str, Cond)]) -> bool {
        for &(suffix, replacement, cond) in rules {
            if self.ends_with(suffix) {
                let stem = self.b.len() - suffix.len();
                if cond(self, stem) {
                    self.replace(stem, replacement);
                    return true;
                }
                return false;
            }
        }
        false
    }
}

fn m_gt0(w: &Word, len: usize) -> bool {
    w.measure(len) > 0
}

fn m_gt1(w: &Word, len: usize) -> bool {
    w.measure(len) > 1
}

fn always(_: &Word, _: usize) -> bool {
    true
}

fn step1a(w: &mut Word) {
    w.apply_rules(&[
        ("sses", "ss", always),
        ("ies", "i", always),
        ("ss", "ss", always),
        ("s", "", always),
    ]);
}

fn step1b(w: &mut Word) {
    if w.ends_with("eed") {
        let stem = w.b.len() - 3;
        if w.measure(stem) > 0 {
            w.replace(stem, "ee");
        }
        return;
    }
    let mut removed = false;
    for suffix in ["ed", "ing"] {
        if w.ends_with(suffix) {
            let stem = w.b.len() - suffix.len();
            if w.has_vowel(stem) {
                w.b.truncate(stem);
                removed = true;
                break;
            }
        }
    }
    if !removed {
        return;
    }
    let len = w.b.len();
    if w.ends_with("at") || w.ends_with("bl") || w.ends_with("iz") {
        w.b.push(b'e');
    } else if w.ends_double_consonant(len) {
        if !matches!(w.b[len - 1], b'l' | b's' | b'z') {
            w.b.truncate(len - 1);
        }
    } else if w.measure(len) == 1 && w.ends_cvc(len) {
        w.b.push(b'e');
    }
}

fn step1c(w: &mut Word) {
    w.apply_rules(&[("y", "i", |w, len| w.has_vowel(len))]);
}

fn step2(w: &mut Word) {
    w.apply_rules(&[
        ("ational", "ate", m_gt0),
        ("tional", "tion", m_gt0),
        ("enci", "ence", m_gt0),
        ("anci", "ance", m_gt0),
        ("izer", "ize", m_gt0),
        ("abli", "able", m_gt0),
        ("alli", "al", m_gt0),
        ("entli", "ent", m_gt0),
        ("eli", "e", m_gt0),
        ("ousli", "ous", m_gt0),
        ("ization", "ize", m_gt0),
        ("ation", "ate", m_gt0),
        ("ator", "ate", m_gt0),
        ("alism", "al", m_gt0),
        ("iveness", "ive", m_gt0),
        ("fulness", "ful", m_gt0),
        ("ousness", "ous", m_gt0),
        ("aliti", "al", m_gt0),
        ("iviti", "ive", m_gt0),
        ("biliti", "ble", m_gt0),
    ]);
}

fn step3(w: &mut Word) {
    w.apply_rules(&[
        ("icate", "ic", m_gt0),
        ("ative", "", m_gt0),
        ("alize", "al", m_gt0),
        ("iciti", "ic", m_gt0),
        ("ical", "ic", m_gt0),
        ("ful", "", m_gt0),
        ("ness", "", m_gt0),
    ]);
}

fn step4(w: &mut Word) {
    w.apply_rules(&[
        ("al", "", m_gt1),
        ("ance", "", m_gt1),
        ("ence", "", m_gt1),
        ("er", "", m_gt1),
        ("ic", "", m_gt1),
        ("able", "", m_gt1),
        ("ible", "", m_gt1),
        ("ant", "", m_gt1),
        ("ement", "", m_gt1),
        ("ment", "", m_gt1),
        ("ent", "", m_gt1),
        ("ion", "", |w, len| {
            w.measure(len) > 1 && matches!(w.b[len - 1], b's' | b't')
        }),
        ("ou", "", m_gt1),
        ("ism", "", m_gt1),
        ("ate", "", m_gt1),
        ("iti", "", m_gt1),
        ("ous", "", m_gt1),
        ("ive", "", m_gt1),
        ("ize", "", m_gt1),
    ]);
}

fn step5(w: &mut Word) {
    if w.ends_with("e") {
        let stem = w.b.len() - 1;
        let m = w.measure(stem);
        if m > 1 || (m == 1 && !w.ends_cvc(stem)) {
            w.b.truncate(stem);
        }
    }
    let len = w.b.len();
    if w.ends_with("ll") && w.measure(len) > 1 {
        w.b.truncate(len - 1);
    }
}

/// Stems a lowercase ASCII word. Anything else is returned unchanged.
pub fn stem(word: &str) -> String {
    if word.is_empty() || !word.bytes().all(|b| b.is_ascii_lowercase()) {
        return String::from(word);
    }
    let mut w = Word {
        b: word.as_bytes().to_vec(),
    };
    step1a(&mut w);
    step1b(&mut w);
    step1c(&mut w);
    step2(&mut w);
    step3(&mut w);
    step4(&mut w);
    step5(&mut w);
    String::from_utf8(w.b).expect("ascii in, ascii out")
}
