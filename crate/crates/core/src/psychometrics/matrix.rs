use std::io::Read;

use rand::Rng;

use super::rsm::category_prob_into;
use super::RaschError;

/// Persons × items ordinal responses with optional missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    persons: usize,
    items: usize,
    /// Highest category `m`; responses lie in `0..=m`.
    max_category: u8,
    data: Vec<Option<u8>>,
    item_names: Vec<String>,
    person_ids: Vec<String>,
}

/// Default 5-point scale: 0 = always disagree .. 4 = always agree.
pub const DEFAULT_MAX_CATEGORY: u8 = 4;

impl ResponseMatrix {
    pub fn new(
        persons: usize,
        items: usize,
        max_category: u8,
        data: Vec<Option<u8>>,
    ) -> Result<Self, RaschError> {
        if max_category == 0 {
            return Err(RaschError::InvalidMatrix("need at least two categories".into()));
        }
        if data.len() != persons * items {
            return Err(RaschError::InvalidMatrix(format!(
                "expected {} cells for {persons} x {items}, got {}",
                persons * items,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|c| c.is_some_and(|x| x > max_category)) {
            return Err(RaschError::InvalidMatrix(format!(
                "person {} item {}: response {} exceeds {max_category}",
                pos / items.max(1) + 1,
                pos % items.max(1) + 1,
                data[pos].unwrap()
            )));
        }
        Ok(Self {
            persons,
            items,
            max_category,
            data,
            item_names: (1..=items).map(|i| format!("item_{i}")).collect(),
            person_ids: (1..=persons).map(|v| v.to_string()).collect(),
        })
    }

    /// Complete matrix from rows of responses.
    pub fn from_rows(rows: &[Vec<u8>], max_category: u8) -> Result<Self, RaschError> {
        let items = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != items) {
            return Err(RaschError::InvalidMatrix("ragged rows".into()));
        }
        let data = rows.iter().flatten().map(|&x| Some(x)).collect();
        Self::new(rows.len(), items, max_category, data)
    }

    pub fn with_item_names(mut self, names: Vec<String>) -> Result<Self, RaschError> {
        if names.len() != self.items {
            return Err(RaschError::InvalidMatrix("item name count mismatch".into()));
        }
        self.item_names = names;
        Ok(self)
    }

    pub fn with_person_ids(mut self, ids: Vec<String>) -> Result<Self, RaschError> {
        if ids.len() != self.persons {
            return Err(RaschError::InvalidMatrix("person id count mismatch".into()));
        }
        self.person_ids = ids;
        Ok(self)
    }

    pub fn persons(&self) -> usize {
        self.persons
    }

    pub fn items(&self) -> usize {
        self.items
    }

    pub fn max_category(&self) -> u8 {
        self.max_category
    }

    pub fn categories(&self) -> usize {
        self.max_category as usize + 1
    }

    pub fn get(&self, person: usize, item: usize) -> Option<u8> {
        self.data[person * self.items + item]
    }

    pub fn row(&self, person: usize) -> &[Option<u8>] {
        &self.data[person * self.items..(person + 1) * self.items]
    }

    pub fn item_names(&self) -> &[String] {
        &self.item_names
    }

    pub fn person_ids(&self) -> &[String] {
        &self.person_ids
    }

    /// Replaces one item's column with new responses.
    pub fn set_item(&mut self, item: usize, column: &[Option<u8>]) -> Result<(), RaschError> {
        if column.len() != self.persons || column.iter().any(|c| c.is_some_and(|x| x > self.max_category)) {
            return Err(RaschError::InvalidMatrix("bad replacement column".into()));
        }
        for (v, c) in column.iter().enumerate() {
            self.data[v * self.items + item] = *c;
        }
        Ok(())
    }

    /// Reads a CSV whose columns are items; blank cells are missing. A first
    /// column named `person` or `id` supplies person identifiers.
    pub fn read_csv<R: Read>(reader: R, max_category: u8) -> Result<Self, RaschError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let has_id = headers
            .get(0)
            .is_some_and(|h| h.eq_ignore_ascii_case("person") || h.eq_ignore_ascii_case("id"));
        let skip = usize::from(has_id);
        let names: Vec<String> = headers.iter().skip(skip).map(str::to_string).collect();
        let mut data = Vec::new();
        let mut ids = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = row + 2;
            if rec.len() != headers.len() {
                return Err(RaschError::Parse {
                    line,
                    message: format!("expected {} fields, found {}", headers.len(), rec.len()),
                });
            }
            if has_id {
                ids.push(rec[0].to_string());
            }
            for field in rec.iter().skip(skip) {
                if field.is_empty() {
                    data.push(None);
                    continue;
                }
                let x: u8 = field.parse().map_err(|_| RaschError::Parse {
                    line,
                    message: format!("response {field:?} is not an integer category"),
                })?;
                if x > max_category {
                    return Err(RaschError::Parse {
                        line,
                        message: format!("response {x} outside 0..={max_category}"),
                    });
                }
                data.push(Some(x));
            }
        }
        let persons = data.len() / names.len().max(1);
        let m = Self::new(persons, names.len(), max_category, data)?.with_item_names(names)?;
        if has_id {
            m.with_person_ids(ids)
        } else {
            Ok(m)
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<(), RaschError> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(&self.item_names)?;
        for v in 0..self.persons {
            wtr.write_record(self.row(v).iter().map(|c| c.map(|x| x.to_string()).unwrap_or_default()))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Draws a complete response matrix from known rating scale parameters.
pub fn simulate_responses<R: Rng + ?Sized>(
    abilities: &[f64],
    difficulties: &[f64],
    thresholds: &[f64],
    rng: &mut R,
) -> ResponseMatrix {
    let mut probs = vec![0.0; thresholds.len() + 1];
    let mut data = Vec::with_capacity(abilities.len() * difficulties.len());
    for &theta in abilities {
        for &delta in difficulties {
            category_prob_into(theta - delta, thresholds, &mut probs);
            data.push(Some(draw_category(&probs, rng)));
        }
    }
    ResponseMatrix::new(abilities.len(), difficulties.len(), thresholds.len() as u8, data)
        .expect("simulated responses are in range")
}

pub(crate) fn draw_category<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> u8 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (x, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return x as u8;
        }
    }
    (probs.len() - 1) as u8
}
