/// Stops once the monitored loss fails to improve on its best value by more
/// than `min_delta` for `patience` consecutive epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub min_delta: f64,
    pub patience: usize,
    best: f64,
    best_epoch: usize,
    wait: usize,
}

impl EarlyStopping {
    pub fn new(min_delta: f64, patience: usize) -> Self {
        Self {
            min_delta,
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            wait: 0,
        }
    }

    /// Record the loss of `epoch`. Returns `(improved, stop)`.
    pub fn update(&mut self, epoch: usize, loss: f64) -> (bool, bool) {
        if loss < self.best - self.min_delta {
            self.best = loss;
            self.best_epoch = epoch;
            self.wait = 0;
            (true, false)
        } else {
            self.wait += 1;
            (false, self.wait >= self.patience)
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_from_epoch_five_stops_at_fifteen() {
        let mut es = EarlyStopping::new(1e-4, 10);
        let mut stopped = None;
        for epoch in 1..=200 {
            let loss = if epoch <= 5 { 10.0 - epoch as f64 } else { 5.0 };
            if es.update(epoch, loss).1 {
                stopped = Some(epoch);
                break;
            }
        }
        assert_eq!(stopped, Some(15));
        assert_eq!(es.best_epoch(), 5);
    }

    #[test]
    fn improvements_below_delta_do_not_count() {
        let mut es = EarlyStopping::new(0.1, 2);
        assert!(es.update(1, 1.0).0);
        assert_eq!(es.update(2, 0.95), (false, false));
        assert_eq!(es.update(3, 0.91), (false, true));
    }
}
