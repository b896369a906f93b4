import type { Assessment, CaseReport, EvalRunState, LesionFeatures } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const ACTION_LABELS: Record<string, string> = {
  analyze: "Analyse",
  xai: "XAI",
  followup: "Follow Up",
};

/** Action buttons are rendered if and only if the server lists the
 * transition as legal for the current state. */
export function renderActionButtons(legalActions: string[]): string {
  if (legalActions.length === 0) return "";
  const buttons = legalActions
    .map((action) => {
      const label = ACTION_LABELS[action] ?? action;
      return `<button class="action" data-action="${escapeHtml(action)}">${escapeHtml(label)}</button>`;
    })
    .join("");
  return `<div class="actions">${buttons}</div>`;
}

function renderDiagnoses(assessment: Assessment): string {
  if (assessment.diagnoses.length === 0) return "";
  const items = assessment.diagnoses
    .map((d) => {
      const final = d === assessment.final_diagnosis;
      return `<li class="${final ? "diagnosis final" : "diagnosis"}">${escapeHtml(d)}${final ? " <em>(final diagnosis)</em>" : ""}</li>`;
    })
    .join("");
  return `<section class="diagnoses"><h3>Differential diagnosis</h3><ol>${items}</ol></section>`;
}

function renderAssessment(title: string, assessment: Assessment): string {
  const parts: string[] = [`<section class="assessment"><h2>${escapeHtml(title)}</h2>`];
  if (assessment.visual_description) {
    parts.push(`<p class="visual">${escapeHtml(assessment.visual_description)}</p>`);
  }
  if (assessment.abcde) {
    const rows = Object.entries(assessment.abcde)
      .map(([k, v]) => `<tr><th>${escapeHtml(k)}</th><td>${escapeHtml(v)}</td></tr>`)
      .join("");
    parts.push(`<table class="abcde">${rows}</table>`);
  }
  if (assessment.feature_presence.length > 0) {
    const items = assessment.feature_presence.map((f) => `<li>${escapeHtml(f)}</li>`).join("");
    parts.push(`<ul class="feature-presence">${items}</ul>`);
  }
  parts.push(renderDiagnoses(assessment));
  if (assessment.final_diagnosis) {
    parts.push(
      `<p class="final-diagnosis">Final diagnosis: <strong>${escapeHtml(assessment.final_diagnosis)}</strong></p>`,
    );
  }
  parts.push("</section>");
  return parts.join("");
}

function renderFeaturePanel(features: LesionFeatures): string {
  const fmt = (x: number) => x.toFixed(4);
  const [r, g, b] = features.color_std;
  return `<section class="features"><h3>Measurements</h3><table>
<tr><th>Circularity</th><td>${fmt(features.circularity)}</td></tr>
<tr><th>Asymmetry (major axis)</th><td>${fmt(features.asymmetry_major)}</td></tr>
<tr><th>Asymmetry (minor axis)</th><td>${fmt(features.asymmetry_minor)}</td></tr>
<tr><th>Average asymmetry</th><td>${fmt(features.asymmetry_avg)}</td></tr>
<tr><th>Color std (R, G, B)</th><td>${fmt(r)}, ${fmt(g)}, ${fmt(b)}</td></tr>
<tr><th>Area / perimeter</th><td>${features.area.toFixed(1)} px&sup2; / ${features.perimeter.toFixed(1)} px</td></tr>
</table></section>`;
}

/** The segmentation outline comes as a contour point list from the service;
 * the client only plots it, it never recomputes it. */
export function renderOverlay(imageUrl: string, contour?: [number, number][]): string {
  const polygon =
    contour && contour.length > 2
      ? `<polygon points="${contour.map(([x, y]) => `${x},${y}`).join(" ")}" />`
      : "";
  return `<div class="viewer"><img src="${escapeHtml(imageUrl)}" alt="case image" />` +
    `<svg class="overlay" preserveAspectRatio="none">${polygon}</svg></div>`;
}

export function renderLabBanner(rationale: string): string {
  return `<div class="lab-banner" role="alert">Lab referral required: ${escapeHtml(rationale)}</div>`;
}

/** Pure projection of GET /cases/{id}/report into HTML — rendering the same
 * report twice yields identical markup. */
export function renderCaseView(report: CaseReport, imageUrl = ""): string {
  const a = report.artifacts;
  const parts: string[] = [
    `<header class="case-header"><span class="case-id">${escapeHtml(report.id)}</span>` +
      `<span class="state state-${escapeHtml(report.state)}">${escapeHtml(report.state)}</span>` +
      (a.path ? `<span class="path">${escapeHtml(a.path)} path</span>` : "") +
      "</header>",
  ];
  if (report.state === "failed") {
    parts.push(
      `<div class="error" role="alert">${escapeHtml(report.failure_reason)}` +
        `<button class="retry" data-retry="1">Retry</button></div>`,
    );
  }
  if (a.send2lab?.required) {
    parts.push(renderLabBanner(a.send2lab.rationale));
  }
  if (imageUrl) parts.push(renderOverlay(imageUrl, a.contour));
  if (a.initial_assessment) parts.push(renderAssessment("Initial assessment", a.initial_assessment));
  if (a.features) parts.push(renderFeaturePanel(a.features));
  if (a.technical_report) {
    parts.push(
      `<details class="technical-report"><summary>Technical report</summary><pre>${escapeHtml(a.technical_report)}</pre></details>`,
    );
  }
  if (a.xai_report) {
    parts.push(`<section class="xai"><h2>Explanation</h2><p>${escapeHtml(a.xai_report)}</p></section>`);
  }
  if (a.followup_assessment) {
    parts.push(renderAssessment("Follow-up assessment", a.followup_assessment));
  }
  parts.push(renderActionButtons(report.legal_actions));
  return parts.join("\n");
}

function barChart(values: { label: string; value: number }[], width = 360, height = 140): string {
  const barW = Math.floor(width / values.length) - 10;
  const bars = values
    .map((v, i) => {
      const h = Math.round(v.value * (height - 30));
      const x = i * (barW + 10) + 5;
      const y = height - 20 - h;
      return (
        `<rect x="${x}" y="${y}" width="${barW}" height="${h}" />` +
        `<text x="${x + barW / 2}" y="${height - 6}" text-anchor="middle">${escapeHtml(v.label)}</text>` +
        `<text x="${x + barW / 2}" y="${y - 4}" text-anchor="middle">${v.value.toFixed(2)}</text>`
      );
    })
    .join("");
  return `<svg class="bar-chart" viewBox="0 0 ${width} ${height}">${bars}</svg>`;
}

function histogram(values: number[], bins = 10, width = 360, height = 140): string {
  if (values.length === 0) return "";
  const counts = new Array<number>(bins).fill(0);
  for (const v of values) {
    const idx = Math.min(bins - 1, Math.max(0, Math.floor(v * bins)));
    counts[idx] += 1;
  }
  const max = Math.max(...counts, 1);
  const barW = width / bins;
  const bars = counts
    .map((c, i) => {
      const h = Math.round((c / max) * (height - 20));
      return `<rect x="${i * barW + 1}" y="${height - 10 - h}" width="${barW - 2}" height="${h}" />`;
    })
    .join("");
  return `<svg class="histogram" viewBox="0 0 ${width} ${height}">${bars}</svg>`;
}

export function renderEvalDashboard(run: EvalRunState): string {
  if (run.status === "failed") {
    return `<div class="error" role="alert">Evaluation failed: ${escapeHtml(run.error ?? "unknown error")}` +
      `<button class="retry" data-retry-eval="1">Retry</button></div>`;
  }
  if (run.status !== "done" || !run.report) {
    return `<p class="progress">Scoring ${run.completed}/${run.total} cases&hellip;</p>`;
  }
  const r = run.report;
  const pct = (x: number) => x.toFixed(2);
  const nliRow = (label: string, pretty: string) => {
    const row = r.nli[label];
    return `<tr><th>${pretty}</th><td>${pct(row.context_fraction)}</td><td>${pct(row.entities_fraction)}</td><td>${pct(row.weighted)}</td></tr>`;
  };
  return `<section class="dashboard">
<h2>Capability report (${r.case_count} cases)</h2>
<table class="capability">
<tr><th></th><th>Context</th><th>Entities</th><th>Weighted</th></tr>
<tr><th>Textual Similarity</th><td>${pct(r.textual_similarity.context)}</td><td>${pct(r.textual_similarity.entities)}</td><td>${pct(r.textual_similarity.weighted)}</td></tr>
${nliRow("neutral", "NLI_N")}
${nliRow("contradiction", "NLI_C")}
${nliRow("entailment", "NLI_E")}
<tr><th>Expert Review</th><td>${pct(r.expert_review.context)}</td><td>${pct(r.expert_review.entities)}</td><td>${pct(r.expert_review.mean)}</td></tr>
<tr class="capability-row"><th>Capability</th><td colspan="3">${pct(r.capability)}</td></tr>
</table>
<h3>Token-matching scores</h3>
${barChart([
    { label: "Precision", value: r.bert_score.precision },
    { label: "Recall", value: r.bert_score.recall },
    { label: "F1", value: r.bert_score.f1 },
  ])}
<h3>F1 distribution</h3>
${histogram(r.bert_per_case.f1)}
</section>`;
}
