//! Query-report parsing and bipartite graph construction.
//!
//! Publisher query reports arrive as delimited text, one row per
//! (search query, product, day, campaign) observation. This module parses
//! them into [`QueryReportRow`]s and aggregates the rows into a
//! [`BipartiteGraph`]: queries on one side, products on the other, edge
//! weight = total impressions the query drove to the product.

use std::collections::HashMap;
use std::io::{Read, Write};

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// Column-name mapping for the report header.
///
/// `cost` and `profit` are optional extensions of the publisher schema;
/// when the columns are absent every row gets 0 for both and a warning is
/// recorded in [`ParseStats`].
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ReportSchema {
    pub search_query: String,
    pub impressions: String,
    pub product: String,
    pub clicks: String,
    pub metric_day: String,
    pub ad_campaign: String,
    pub cost: String,
    pub profit: String,
}

impl Default for ReportSchema {
    fn default() -> Self {
        Self {
            search_query: "search_query".into(),
            impressions: "impressions".into(),
            product: "product".into(),
            clicks: "clicks".into(),
            metric_day: "metric_day".into(),
            ad_campaign: "ad_campaign".into(),
            cost: "cost".into(),
            profit: "profit".into(),
        }
    }
}

/// One line of a publisher query report.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryReportRow {
    pub search_query: String,
    pub impressions: u64,
    pub product: String,
    pub clicks: u64,
    pub metric_day: NaiveDate,
    pub ad_campaign: String,
    pub cost: f64,
    pub profit: f64,
}

impl QueryReportRow {
    /// Serialize back to the six publisher columns, losslessly.
    pub fn to_record(&self) -> Vec<String> {
        vec![
            self.search_query.clone(),
            self.impressions.to_string(),
            self.product.clone(),
            self.clicks.to_string(),
            self.metric_day.format("%Y-%m-%d").to_string(),
            self.ad_campaign.clone(),
        ]
    }
}

/// Counters and warnings from one parse run.
#[derive(Debug, Clone, Default)]
pub struct ParseStats {
    /// Rows successfully parsed.
    pub rows_parsed: u64,
    /// Rows skipped because a field failed to parse.
    pub rows_malformed: u64,
    /// Non-fatal data-quality notes (absent money columns, etc).
    pub warnings: Vec<String>,
}

fn required_column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::MissingColumn(name.to_string()))
}

fn optional_column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

/// Parse a delimited query report.
///
/// Missing required columns are a fatal configuration error. Rows whose
/// numeric or date fields fail to parse, or whose query/product is empty
/// after trimming, are skipped and counted in `rows_malformed` — never
/// silently dropped.
pub fn parse_report<R: Read>(
    reader: R,
    schema: &ReportSchema,
    delimiter: u8,
) -> Result<(Vec<QueryReportRow>, ParseStats)> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    let col_query = required_column(&headers, &schema.search_query)?;
    let col_impr = required_column(&headers, &schema.impressions)?;
    let col_prod = required_column(&headers, &schema.product)?;
    let col_clicks = required_column(&headers, &schema.clicks)?;
    let col_day = required_column(&headers, &schema.metric_day)?;
    let col_campaign = required_column(&headers, &schema.ad_campaign)?;
    let col_cost = optional_column(&headers, &schema.cost);
    let col_profit = optional_column(&headers, &schema.profit);

    let mut stats = ParseStats::default();
    if col_cost.is_none() {
        stats
            .warnings
            .push(format!("column `{}` absent; cost defaults to 0", schema.cost));
    }
    if col_profit.is_none() {
        stats.warnings.push(format!(
            "column `{}` absent; profit defaults to 0",
            schema.profit
        ));
    }

    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        match parse_record(&record, col_query, col_impr, col_prod, col_clicks, col_day, col_campaign, col_cost, col_profit) {
            Some(row) => {
                stats.rows_parsed += 1;
                rows.push(row);
            }
            None => stats.rows_malformed += 1,
        }
    }
    Ok((rows, stats))
}

#[allow(clippy::too_many_arguments)]
fn parse_record(
    record: &csv::StringRecord,
    col_query: usize,
    col_impr: usize,
    col_prod: usize,
    col_clicks: usize,
    col_day: usize,
    col_campaign: usize,
    col_cost: Option<usize>,
    col_profit: Option<usize>,
) -> Option<QueryReportRow> {
    let field = |i: usize| record.get(i);
    let search_query = field(col_query)?.trim();
    let product = field(col_prod)?.trim();
    if search_query.is_empty() || product.is_empty() {
        return None;
    }
    let impressions: u64 = field(col_impr)?.trim().parse().ok()?;
    let clicks: u64 = field(col_clicks)?.trim().parse().ok()?;
    let metric_day = NaiveDate::parse_from_str(field(col_day)?.trim(), "%Y-%m-%d").ok()?;
    let ad_campaign = field(col_campaign)?.trim().to_string();
    let cost = match col_cost {
        Some(i) => field(i)?.trim().parse().ok()?,
        None => 0.0,
    };
    let profit = match col_profit {
        Some(i) => field(i)?.trim().parse().ok()?,
        None => 0.0,
    };
    Some(QueryReportRow {
        search_query: search_query.to_string(),
        impressions,
        product: product.to_string(),
        clicks,
        metric_day,
        ad_campaign,
        cost,
        profit,
    })
}

/// Query-string normalization applied before aggregation.
///
/// Trimming always happens (parse already enforces non-empty after trim);
/// whitespace collapsing and lowercasing are on by default because
/// publisher reports mix cases and spacing for the same user query.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct QueryNormalization {
    pub lowercase: bool,
    pub collapse_whitespace: bool,
}

impl Default for QueryNormalization {
    fn default() -> Self {
        Self {
            lowercase: true,
            collapse_whitespace: true,
        }
    }
}

impl QueryNormalization {
    pub fn apply(&self, raw: &str) -> String {
        let trimmed = raw.trim();
        let mut s = if self.collapse_whitespace {
            trimmed.split_whitespace().collect::<Vec<_>>().join(" ")
        } else {
            trimmed.to_string()
        };
        if self.lowercase {
            s = s.to_lowercase();
        }
        s
    }
}

/// Aggregated business metrics for one product node.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ProductMetrics {
    pub impressions: u64,
    pub clicks: u64,
    pub cost: f64,
    pub profit: f64,
}

/// Query–product bipartite graph with impression edge weights.
///
/// Node ids are dense 0-based indices assigned after a lexicographic sort
/// of the surviving node names, so identical inputs produce identical ids
/// regardless of row order. Adjacency is stored in compressed sparse form
/// in both directions; edge weights are strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    queries: Vec<String>,
    products: Vec<String>,
    // query -> (product, weight), rows sorted by product id
    q_offsets: Vec<usize>,
    q_products: Vec<u32>,
    q_weights: Vec<u64>,
    // product -> (query, weight), rows sorted by query id
    p_offsets: Vec<usize>,
    p_queries: Vec<u32>,
    p_weights: Vec<u64>,
    metrics: Vec<ProductMetrics>,
}

impl BipartiteGraph {
    pub fn n_queries(&self) -> usize {
        self.queries.len()
    }

    pub fn n_products(&self) -> usize {
        self.products.len()
    }

    pub fn n_edges(&self) -> usize {
        self.q_products.len()
    }

    pub fn query_name(&self, q: u32) -> &str {
        &self.queries[q as usize]
    }

    pub fn product_name(&self, p: u32) -> &str {
        &self.products[p as usize]
    }

    pub fn product_names(&self) -> &[String] {
        &self.products
    }

    pub fn query_names(&self) -> &[String] {
        &self.queries
    }

    pub fn find_product(&self, name: &str) -> Option<u32> {
        self.products.binary_search_by(|p| p.as_str().cmp(name)).ok().map(|i| i as u32)
    }

    pub fn find_query(&self, name: &str) -> Option<u32> {
        self.queries.binary_search_by(|q| q.as_str().cmp(name)).ok().map(|i| i as u32)
    }

    /// Number of distinct products query `q` drives impressions to.
    pub fn f_sq(&self, q: u32) -> usize {
        self.q_offsets[q as usize + 1] - self.q_offsets[q as usize]
    }

    /// Products linked by query `q`, with impression weights.
    pub fn query_neighbors(&self, q: u32) -> impl Iterator<Item = (u32, u64)> + '_ {
        let lo = self.q_offsets[q as usize];
        let hi = self.q_offsets[q as usize + 1];
        self.q_products[lo..hi]
            .iter()
            .copied()
            .zip(self.q_weights[lo..hi].iter().copied())
    }

    /// Queries linking product `p`, with impression weights.
    pub fn product_neighbors(&self, p: u32) -> impl Iterator<Item = (u32, u64)> + '_ {
        let lo = self.p_offsets[p as usize];
        let hi = self.p_offsets[p as usize + 1];
        self.p_queries[lo..hi]
            .iter()
            .copied()
            .zip(self.p_weights[lo..hi].iter().copied())
    }

    pub fn product_metrics(&self, p: u32) -> &ProductMetrics {
        &self.metrics[p as usize]
    }

    /// Sum of all edge weights (= sum of impressions over surviving rows).
    pub fn total_edge_weight(&self) -> u64 {
        self.q_weights.iter().sum()
    }

    /// All edges as (query, product, weight), in (query, product) order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, u64)> + '_ {
        (0..self.n_queries() as u32)
            .flat_map(move |q| self.query_neighbors(q).map(move |(p, w)| (q, p, w)))
    }
}

/// Aggregate parsed rows into a [`BipartiteGraph`].
///
/// Rows are pooled across days and campaigns; `W_bi(q, p)` is the summed
/// impression count for the (normalized query, product) pair. Pairs whose
/// total is zero are not edges, and nodes that end up with no edges are
/// dropped. Returns warnings for products whose aggregated clicks exceed
/// aggregated impressions (noisy publisher data, not an error).
pub fn build_bipartite(
    rows: &[QueryReportRow],
    normalization: QueryNormalization,
) -> Result<(BipartiteGraph, Vec<String>)> {
    // Canonical row order makes every downstream accumulation (including
    // float cost/profit sums) independent of input permutation.
    let mut canon: Vec<(String, &QueryReportRow)> = rows
        .iter()
        .map(|r| (normalization.apply(&r.search_query), r))
        .filter(|(q, r)| !q.is_empty() && !r.product.trim().is_empty())
        .collect();
    canon.sort_by(|(qa, ra), (qb, rb)| {
        (qa, &ra.product, ra.metric_day, &ra.ad_campaign, ra.impressions, ra.clicks)
            .cmp(&(qb, &rb.product, rb.metric_day, &rb.ad_campaign, rb.impressions, rb.clicks))
            .then(ra.cost.total_cmp(&rb.cost))
            .then(ra.profit.total_cmp(&rb.profit))
    });

    // First pass: aggregate impressions per (query, product) pair.
    let mut pair_weight: HashMap<(String, String), u64> = HashMap::new();
    for (q, row) in &canon {
        let key = (q.clone(), row.product.trim().to_string());
        *pair_weight.entry(key).or_insert(0) += row.impressions;
    }

    // Surviving node sets come from positive-weight pairs only.
    let mut edges: Vec<(&str, &str, u64)> = pair_weight
        .iter()
        .filter(|(_, &w)| w > 0)
        .map(|((q, p), &w)| (q.as_str(), p.as_str(), w))
        .collect();
    if edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    edges.sort();

    let mut queries: Vec<String> = edges.iter().map(|(q, _, _)| q.to_string()).collect();
    queries.dedup();
    let mut products: Vec<String> = edges.iter().map(|(_, p, _)| p.to_string()).collect();
    products.sort();
    products.dedup();

    let query_id: HashMap<&str, u32> = queries
        .iter()
        .enumerate()
        .map(|(i, q)| (q.as_str(), i as u32))
        .collect();
    let product_id: HashMap<&str, u32> = products
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_str(), i as u32))
        .collect();

    // Query-major CSR. `edges` is sorted by (query, product) already.
    let mut q_offsets = vec![0usize; queries.len() + 1];
    let mut q_products = Vec::with_capacity(edges.len());
    let mut q_weights = Vec::with_capacity(edges.len());
    for (q, p, w) in &edges {
        q_offsets[query_id[q] as usize + 1] += 1;
        q_products.push(product_id[p]);
        q_weights.push(*w);
    }
    for i in 0..queries.len() {
        q_offsets[i + 1] += q_offsets[i];
    }

    // Product-major transpose.
    let mut p_offsets = vec![0usize; products.len() + 1];
    for &p in &q_products {
        p_offsets[p as usize + 1] += 1;
    }
    for i in 0..products.len() {
        p_offsets[i + 1] += p_offsets[i];
    }
    let mut cursor = p_offsets.clone();
    let mut p_queries = vec![0u32; edges.len()];
    let mut p_weights = vec![0u64; edges.len()];
    for (q, row_lo) in q_offsets[..queries.len()].iter().enumerate() {
        for e in *row_lo..q_offsets[q + 1] {
            let p = q_products[e] as usize;
            p_queries[cursor[p]] = q as u32;
            p_weights[cursor[p]] = q_weights[e];
            cursor[p] += 1;
        }
    }

    // Per-product metrics over all rows of surviving products, accumulated
    // in canonical row order.
    let mut metrics = vec![ProductMetrics::default(); products.len()];
    for (_, row) in &canon {
        if let Some(&p) = product_id.get(row.product.trim()) {
            let m = &mut metrics[p as usize];
            m.impressions += row.impressions;
            m.clicks += row.clicks;
            m.cost += row.cost;
            m.profit += row.profit;
        }
    }

    let mut warnings = Vec::new();
    for (p, m) in metrics.iter().enumerate() {
        if m.clicks > m.impressions {
            warnings.push(format!(
                "product `{}`: aggregated clicks ({}) exceed impressions ({})",
                products[p], m.clicks, m.impressions
            ));
        }
    }

    let graph = BipartiteGraph {
        queries,
        products,
        q_offsets,
        q_products,
        q_weights,
        p_offsets,
        p_queries,
        p_weights,
        metrics,
    };
    debug_assert!((0..graph.n_queries() as u32).all(|q| graph.f_sq(q) >= 1));
    Ok((graph, warnings))
}

// ---------------------------------------------------------------------------
// Artifact I/O
//
// Edge list: headerless TSV `query_id<TAB>product_id<TAB>weight`, sorted by
// (query_id, product_id). Node index files: headerless TSV `id<TAB>name`.
// Product metrics: CSV with header `product,impressions,clicks,cost,profit`.
// ---------------------------------------------------------------------------

pub fn write_edges_tsv<W: Write>(g: &BipartiteGraph, mut w: W) -> std::io::Result<()> {
    for (q, p, weight) in g.edges() {
        writeln!(w, "{q}\t{p}\t{weight}")?;
    }
    Ok(())
}

pub fn write_index_tsv<W: Write>(names: &[String], mut w: W) -> std::io::Result<()> {
    for (i, name) in names.iter().enumerate() {
        writeln!(w, "{i}\t{name}")?;
    }
    Ok(())
}

pub fn write_product_metrics_csv<W: Write>(g: &BipartiteGraph, mut w: W) -> std::io::Result<()> {
    writeln!(w, "product,impressions,clicks,cost,profit")?;
    for p in 0..g.n_products() as u32 {
        let m = g.product_metrics(p);
        writeln!(
            w,
            "{},{},{},{},{}",
            g.product_name(p),
            m.impressions,
            m.clicks,
            m.cost,
            m.profit
        )?;
    }
    Ok(())
}

fn parse_index_tsv(content: &str, path: &str) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        let mut it = line.splitn(2, '\t');
        let id: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed("node index", path, lineno + 1, "bad id"))?;
        let name = it
            .next()
            .ok_or_else(|| malformed("node index", path, lineno + 1, "missing name"))?;
        if id != names.len() {
            return Err(malformed("node index", path, lineno + 1, "ids not dense"));
        }
        names.push(name.to_string());
    }
    Ok(names)
}

fn malformed(what: &'static str, path: &str, line: usize, msg: &str) -> Error {
    Error::MalformedArtifact {
        what,
        path: path.to_string(),
        line,
        msg: msg.to_string(),
    }
}

/// Read back the edge-list dump written by [`write_edges_tsv`] and friends.
///
/// `metrics_csv` is optional; without it all product metrics are zero
/// except impressions, which are recomputed from edge weights.
pub fn read_bipartite(
    edges_tsv: &str,
    queries_tsv: &str,
    products_tsv: &str,
    metrics_csv: Option<&str>,
) -> Result<BipartiteGraph> {
    let queries = parse_index_tsv(queries_tsv, "queries.tsv")?;
    let products = parse_index_tsv(products_tsv, "products.tsv")?;

    let mut edges: Vec<(u32, u32, u64)> = Vec::new();
    for (lineno, line) in edges_tsv.lines().enumerate() {
        let mut it = line.split('\t');
        let bad = || malformed("edge list", "edges.tsv", lineno + 1, "expected q\\tp\\tweight");
        let q: u32 = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let p: u32 = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let w: u64 = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        if q as usize >= queries.len() || p as usize >= products.len() || w == 0 {
            return Err(malformed("edge list", "edges.tsv", lineno + 1, "id out of range or zero weight"));
        }
        edges.push((q, p, w));
    }
    if edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    edges.sort();

    let mut q_offsets = vec![0usize; queries.len() + 1];
    let mut q_products = Vec::with_capacity(edges.len());
    let mut q_weights = Vec::with_capacity(edges.len());
    for &(q, p, w) in &edges {
        q_offsets[q as usize + 1] += 1;
        q_products.push(p);
        q_weights.push(w);
    }
    for i in 0..queries.len() {
        q_offsets[i + 1] += q_offsets[i];
    }

    let mut p_offsets = vec![0usize; products.len() + 1];
    for &(_, p, _) in &edges {
        p_offsets[p as usize + 1] += 1;
    }
    for i in 0..products.len() {
        p_offsets[i + 1] += p_offsets[i];
    }
    let mut cursor = p_offsets.clone();
    let mut p_queries = vec![0u32; edges.len()];
    let mut p_weights = vec![0u64; edges.len()];
    for &(q, p, w) in &edges {
        p_queries[cursor[p as usize]] = q;
        p_weights[cursor[p as usize]] = w;
        cursor[p as usize] += 1;
    }

    let mut metrics = vec![ProductMetrics::default(); products.len()];
    match metrics_csv {
        Some(content) => {
            let mut rdr = csv::Reader::from_reader(content.as_bytes());
            let name_to_id: HashMap<&str, usize> = products
                .iter()
                .enumerate()
                .map(|(i, p)| (p.as_str(), i))
                .collect();
            for rec in rdr.records() {
                let rec = rec?;
                let name = rec.get(0).unwrap_or("");
                let Some(&p) = name_to_id.get(name) else {
                    continue;
                };
                let get = |i: usize| rec.get(i).unwrap_or("0").trim().to_string();
                metrics[p] = ProductMetrics {
                    impressions: get(1).parse().unwrap_or(0),
                    clicks: get(2).parse().unwrap_or(0),
                    cost: get(3).parse().unwrap_or(0.0),
                    profit: get(4).parse().unwrap_or(0.0),
                };
            }
        }
        None => {
            for &(_, p, w) in &edges {
                metrics[p as usize].impressions += w;
            }
        }
    }

    Ok(BipartiteGraph {
        queries,
        products,
        q_offsets,
        q_products,
        q_weights,
        p_offsets,
        p_queries,
        p_weights,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE1_HEADER: &str = "search_query,impressions,product,clicks,metric_day,ad_campaign";
    const TABLE1_ROW: &str = "chopper axe,6,B00EOVRX06,1,2023-09-01,12345";

    fn parse_str(s: &str) -> (Vec<QueryReportRow>, ParseStats) {
        parse_report(s.as_bytes(), &ReportSchema::default(), b',').unwrap()
    }

    fn row(q: &str, imp: u64, p: &str) -> QueryReportRow {
        QueryReportRow {
            search_query: q.into(),
            impressions: imp,
            product: p.into(),
            clicks: 0,
            metric_day: NaiveDate::from_ymd_opt(2023, 9, 1).unwrap(),
            ad_campaign: "c".into(),
            cost: 0.0,
            profit: 0.0,
        }
    }

    #[test]
    fn mock_publisher_row_parses_to_exact_fields() {
        let input = format!("{TABLE1_HEADER}\n{TABLE1_ROW}\n");
        let (rows, stats) = parse_str(&input);
        assert_eq!(stats.rows_malformed, 0);
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert_eq!(r.search_query, "chopper axe");
        assert_eq!(r.impressions, 6);
        assert_eq!(r.product, "B00EOVRX06");
        assert_eq!(r.clicks, 1);
        assert_eq!(r.metric_day, NaiveDate::from_ymd_opt(2023, 9, 1).unwrap());
        assert_eq!(r.ad_campaign, "12345");
    }

    #[test]
    fn mock_publisher_row_reserializes_losslessly() {
        let input = format!("{TABLE1_HEADER}\n{TABLE1_ROW}\n");
        let (rows, _) = parse_str(&input);
        assert_eq!(rows[0].to_record().join(","), TABLE1_ROW);
    }

    #[test]
    fn header_only_stream_yields_empty_sequence() {
        let (rows, stats) = parse_str(&format!("{TABLE1_HEADER}\n"));
        assert!(rows.is_empty());
        assert_eq!(stats.rows_parsed, 0);
        assert_eq!(stats.rows_malformed, 0);
    }

    #[test]
    fn unparseable_numeric_skips_row_and_counts() {
        let input = format!("{TABLE1_HEADER}\nchopper axe,abc,B00EOVRX06,1,2023-09-01,12345\n{TABLE1_ROW}\n");
        let (rows, stats) = parse_str(&input);
        assert_eq!(rows.len(), 1);
        assert_eq!(stats.rows_malformed, 1);
    }

    #[test]
    fn missing_required_column_is_fatal() {
        let err = parse_report(
            "search_query,impressions,product,clicks,metric_day\nq,1,p,0,2023-09-01\n".as_bytes(),
            &ReportSchema::default(),
            b',',
        )
        .unwrap_err();
        match err {
            Error::MissingColumn(c) => assert_eq!(c, "ad_campaign"),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn absent_money_columns_warn_and_default_zero() {
        let (rows, stats) = parse_str(&format!("{TABLE1_HEADER}\n{TABLE1_ROW}\n"));
        assert_eq!(rows[0].cost, 0.0);
        assert_eq!(rows[0].profit, 0.0);
        assert_eq!(stats.warnings.len(), 2);
    }

    #[test]
    fn money_columns_parse_when_present() {
        let input = format!("{TABLE1_HEADER},cost,profit\n{TABLE1_ROW},1.25,3.5\n");
        let (rows, stats) = parse_str(&input);
        assert!(stats.warnings.is_empty());
        assert_eq!(rows[0].cost, 1.25);
        assert_eq!(rows[0].profit, 3.5);
    }

    #[test]
    fn duplicate_pair_weights_add() {
        let rows = vec![row("q1", 3, "A"), row("q1", 2, "A")];
        let (g, _) = build_bipartite(&rows, QueryNormalization::default()).unwrap();
        assert_eq!(g.n_edges(), 1);
        assert_eq!(g.query_neighbors(0).next().unwrap().1, 5);
    }

    #[test]
    fn f_sq_counts_distinct_products() {
        let rows = vec![row("q1", 6, "A"), row("q1", 4, "B"), row("q2", 2, "B")];
        let (g, _) = build_bipartite(&rows, QueryNormalization::default()).unwrap();
        let q1 = g.find_query("q1").unwrap();
        let q2 = g.find_query("q2").unwrap();
        assert_eq!(g.f_sq(q1), 2);
        assert_eq!(g.f_sq(q2), 1);
    }

    #[test]
    fn total_weight_matches_scalar_accumulation_oracle() {
        // Oracle: a single pass over the raw rows, independent of any
        // graph bookkeeping.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let rows: Vec<QueryReportRow> = (0..1000)
            .map(|_| {
                row(
                    &format!("q{}", rng.random_range(0..50)),
                    rng.random_range(0..20),
                    &format!("p{}", rng.random_range(0..30)),
                )
            })
            .collect();
        let oracle: u64 = rows.iter().map(|r| r.impressions).sum();
        let (g, _) = build_bipartite(&rows, QueryNormalization::default()).unwrap();
        assert_eq!(g.total_edge_weight(), oracle);
        assert!((0..g.n_queries() as u32).all(|q| g.f_sq(q) >= 1));
    }

    #[test]
    fn normalization_merges_case_and_whitespace_variants() {
        let rows = vec![row("Chopper  Axe", 3, "A"), row("chopper axe ", 2, "A")];
        let (g, _) = build_bipartite(&rows, QueryNormalization::default()).unwrap();
        assert_eq!(g.n_queries(), 1);
        assert_eq!(g.query_name(0), "chopper axe");
        assert_eq!(g.query_neighbors(0).next().unwrap().1, 5);

        let off = QueryNormalization {
            lowercase: false,
            collapse_whitespace: false,
        };
        let (g2, _) = build_bipartite(&rows, off).unwrap();
        assert_eq!(g2.n_queries(), 2);
    }

    #[test]
    fn zero_impression_pairs_are_not_edges() {
        let rows = vec![row("q1", 0, "A"), row("q1", 4, "B")];
        let (g, _) = build_bipartite(&rows, QueryNormalization::default()).unwrap();
        assert_eq!(g.n_products(), 1);
        assert_eq!(g.product_name(0), "B");
    }

    #[test]
    fn all_zero_rows_is_empty_graph_error() {
        let rows = vec![row("q1", 0, "A")];
        let err = build_bipartite(&rows, QueryNormalization::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyGraph));
    }

    #[test]
    fn clicks_above_impressions_warns_after_aggregation() {
        let mut r = row("q1", 2, "A");
        r.clicks = 5;
        let (_, warnings) = build_bipartite(&[r], QueryNormalization::default()).unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("clicks"));
    }

    #[test]
    fn edge_list_round_trip() {
        let rows = vec![
            row("q1", 6, "A"),
            row("q1", 4, "B"),
            row("q2", 2, "B"),
            row("q3", 9, "C"),
        ];
        let (g, _) = build_bipartite(&rows, QueryNormalization::default()).unwrap();
        let mut edges = Vec::new();
        let mut queries = Vec::new();
        let mut products = Vec::new();
        let mut metrics = Vec::new();
        write_edges_tsv(&g, &mut edges).unwrap();
        write_index_tsv(g.query_names(), &mut queries).unwrap();
        write_index_tsv(g.product_names(), &mut products).unwrap();
        write_product_metrics_csv(&g, &mut metrics).unwrap();
        let g2 = read_bipartite(
            std::str::from_utf8(&edges).unwrap(),
            std::str::from_utf8(&queries).unwrap(),
            std::str::from_utf8(&products).unwrap(),
            Some(std::str::from_utf8(&metrics).unwrap()),
        )
        .unwrap();
        assert_eq!(g, g2);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_rows() -> impl Strategy<Value = Vec<QueryReportRow>> {
            prop::collection::vec(
                (0u8..12, 0u64..8, 0u8..10, 0u64..4, 0.0f64..10.0),
                1..60,
            )
            .prop_map(|specs| {
                specs
                    .into_iter()
                    .map(|(q, imp, p, clicks, cost)| {
                        let mut r = row(&format!("q{q}"), imp, &format!("p{p}"));
                        r.clicks = clicks;
                        r.cost = cost;
                        r
                    })
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn aggregation_is_order_independent(rows in arb_rows(), seed in 0u64..1000) {
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                let norm = QueryNormalization::default();
                let base = build_bipartite(&rows, norm);
                let mut shuffled = rows.clone();
                shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                let permuted = build_bipartite(&shuffled, norm);
                match (base, permuted) {
                    (Ok((a, _)), Ok((b, _))) => prop_assert_eq!(a, b),
                    (Err(Error::EmptyGraph), Err(Error::EmptyGraph)) => {}
                    _ => prop_assert!(false, "one order failed, the other did not"),
                }
            }

            #[test]
            fn edge_weight_sum_equals_row_sum(rows in arb_rows()) {
                let oracle: u64 = rows.iter().map(|r| r.impressions).sum();
                match build_bipartite(&rows, QueryNormalization::default()) {
                    Ok((g, _)) => prop_assert_eq!(g.total_edge_weight(), oracle),
                    Err(Error::EmptyGraph) => prop_assert_eq!(oracle, 0),
                    Err(e) => prop_assert!(false, "unexpected error {}", e),
                }
            }
        }
    }
}
