use crate::Failure;

pub fn float_list(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    let out: Vec<f64> = text
        .split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .map_err(|_| Failure::Usage(format!("{what}: {t:?} is not a number")))
        })
        .collect::<Result<_, _>>()?;
    if let Some(x) = out.iter().find(|x| !x.is_finite()) {
        return Err(Failure::Usage(format!("{what}: {x} is not finite")));
    }
    Ok(out)
}

pub fn usize_list(text: &str, what: &str) -> Result<Vec<usize>, Failure> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<usize>()
                .map_err(|_| Failure::Usage(format!("{what}: {t:?} is not a nonnegative integer")))
        })
        .collect()
}

/// Strictly increasing times in (0, 1).
pub fn times(text: &str) -> Result<Vec<f64>, Failure> {
    let t = float_list(text, "times")?;
    if let Some(x) = t.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        return Err(Failure::Usage(format!("times: {x} is not in (0, 1)")));
    }
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Failure::Usage("times must be strictly increasing".into()));
    }
    Ok(t)
}

/// `a..b` (inclusive) or a single value.
pub fn n_range(text: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::Usage(format!("n range {text:?}: expected `a..b` or an integer"));
    let (a, b) = match text.split_once("..") {
        Some((a, b)) => (
            a.trim().parse::<usize>().map_err(|_| bad())?,
            b.trim().trim_start_matches('=').parse::<usize>().map_err(|_| bad())?,
        ),
        None => {
            let a = text.trim().parse::<usize>().map_err(|_| bad())?;
            (a, a)
        }
    };
    if a == 0 || b < a {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

/// `start:stop:step`, inclusive of `stop` up to rounding.
pub fn float_range(text: &str) -> Result<Vec<f64>, Failure> {
    let parts = float_list(&text.replace(':', ","), "s range")?;
    let [a, b, h] = parts[..] else {
        return Err(Failure::Usage(format!("s range {text:?}: expected start:stop:step")));
    };
    if h <= 0.0 || b < a {
        return Err(Failure::Usage(format!(
            "s range {text:?}: need step > 0 and stop >= start"
        )));
    }
    let count = ((b - a) / h + 1e-9).floor() as usize;
    if count > 1_000_000 {
        return Err(Failure::Usage("s range has too many points".into()));
    }
    Ok((0..=count).map(|i| a + h * i as f64).collect())
}
