//! Regenerates the checked-in fixtures under `fixtures/`.
//!
//! cargo run -p isp-core --example make_fixtures

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

const GENRES: &[&str] = &[
    "drama", "comedy", "thriller", "action", "romance", "horror", "documentary", "crime", "adventure",
    "scifi", "fantasy", "mystery", "animation", "family", "war", "western", "musical", "history",
    "biography", "sport", "noir", "satire", "anthology", "experimental",
];

const FILLER: &[&str] = &[
    "story", "life", "world", "new", "young", "man", "woman", "city", "family", "friends", "journey",
    "secret", "past", "love", "night", "day", "home", "town", "help", "find", "must", "two", "years",
];

fn zipf_weights(n: usize, s: f64) -> Vec<f64> {
    (1..=n).map(|r| 1.0 / (r as f64).powf(s)).collect()
}

fn genre_vocab(g: &str) -> Vec<String> {
    (0..6).map(|i| format!("{g}{}", ["x", "lore", "mood", "tone", "arc", "beat"][i])).collect()
}

fn movies(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let languages: Vec<String> = (0..30).map(|i| format!("lang{i:02}")).collect();
    let producers: Vec<String> = (0..150).map(|i| format!("studio{i:03}")).collect();
    let genre_w = WeightedIndex::new(zipf_weights(GENRES.len(), 1.0)).unwrap();
    let lang_w = WeightedIndex::new(zipf_weights(languages.len(), 1.3)).unwrap();
    let prod_w = WeightedIndex::new(zipf_weights(producers.len(), 0.9)).unwrap();

    let mut out = String::from("id,text,genre,language,producer\n");
    for i in 0..n {
        let n_genres = rng.gen_range(1..=3);
        let mut genres: Vec<&str> = Vec::new();
        while genres.len() < n_genres {
            let g = GENRES[genre_w.sample(&mut rng)];
            if !genres.contains(&g) {
                genres.push(g);
            }
        }
        let language = &languages[lang_w.sample(&mut rng)];
        let producer = &producers[prod_w.sample(&mut rng)];
        let mut words = Vec::new();
        for _ in 0..14 {
            if rng.gen_bool(0.7) {
                let g = genres.choose(&mut rng).unwrap();
                words.push(genre_vocab(g).choose(&mut rng).unwrap().clone());
            } else {
                words.push(FILLER.choose(&mut rng).unwrap().to_string());
            }
        }
        writeln!(out, "m{i:04},{},{},{language},{producer}", words.join(" "), genres.join("|")).unwrap();
    }
    out
}

/// Items in `clusters` tight blobs; each blob is its own genre.
fn clustered(n: usize, clusters: usize, dim: usize, seed: u64) -> (String, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..clusters)
        .map(|_| (0..dim).map(|_| rng.gen_range(0.0..10.0)).collect())
        .collect();
    let moods = ["calm", "tense", "dark", "bright", "odd", "warm"];
    let mood_w = WeightedIndex::new(zipf_weights(moods.len(), 1.0)).unwrap();
    let jitter = rand::distributions::Uniform::new(-0.5, 0.5);
    let mut csv = String::from("id,text,genre,mood\n");
    let mut emb = format!("dim={dim} metric=euclidean\n");
    for i in 0..n {
        let c = i % clusters;
        let mood = moods[mood_w.sample(&mut rng)];
        writeln!(csv, "c{i:04},,blob{c:02},{mood}").unwrap();
        emb.push_str(&format!("c{i:04}"));
        for v in &centers[c] {
            write!(emb, " {:.6}", v + jitter.sample(&mut rng)).unwrap();
        }
        emb.push('\n');
    }
    (csv, emb)
}

const SMALL: &str = "\
id,text,genre,language
s01,a gritty space adventure across distant worlds,scifi|adventure,en
s02,a quiet family drama in a small town,drama|family,fr
s03,two friends plan a daring heist,crime|comedy,en
s04,a haunted house holds a dark secret,horror,de
s05,space explorers find an ancient signal,scifi,fr
s06,a romantic comedy set in paris,romance|comedy,fr
s07,detectives chase a killer through the city,crime|thriller,en
s08,a musical journey of a young singer,musical|drama,es
s09,an animated family adventure with talking animals,animation|family,es
s10,a war veteran returns home to rebuild his life,war|drama,de
";

fn main() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    fs::create_dir_all(&dir).unwrap();
    fs::write(dir.join("movies_1000.csv"), movies(1000, 2021)).unwrap();
    let (csv, emb) = clustered(400, 20, 8, 7);
    fs::write(dir.join("clustered_400.csv"), csv).unwrap();
    fs::write(dir.join("clustered_400.emb"), emb).unwrap();
    fs::write(dir.join("small.csv"), SMALL).unwrap();
    println!("fixtures written to {}", dir.display());
}
