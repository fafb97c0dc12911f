/** Pure DOM-string renderers for the labeling screens. */

import { Progress, Question, SessionInfo } from "./api.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function valueCell(values: string[]): string {
  if (values.length === 0) return "<td class=\"empty\">—</td>";
  const items = values.map((v) => esc(v)).join("<br>");
  return `<td>${items}</td>`;
}

const MAX_NEIGHBORS = 5;

function neighborList(names: string[]): string {
  const shown = names.slice(0, MAX_NEIGHBORS);
  const items = shown.map((n) => `<li>${esc(n)}</li>`).join("");
  const more = names.length > MAX_NEIGHBORS
    ? `<li class="more">+${names.length - MAX_NEIGHBORS} more</li>`
    : "";
  return `<ul class="neighbors">${items}${more}</ul>`;
}

/**
 * One question card: the two record names, a side-by-side attribute
 * table, and (when present) the records' neighborhoods for context.
 */
export function renderQuestionCard(q: Question): string {
  const rows = q.attributes
    .map((row) => {
      const label = row.attr1 === row.attr2
        ? esc(row.attr1)
        : `${esc(row.attr1)} / ${esc(row.attr2)}`;
      return `<tr><th>${label}</th>${valueCell(row.values1)}` +
        `${valueCell(row.values2)}</tr>`;
    })
    .join("");
  const hasContext =
    q.neighborhood.side1.length > 0 || q.neighborhood.side2.length > 0;
  const context = hasContext
    ? `<div class="context"><h3>Related records</h3>` +
      `<div class="context-cols">` +
      `<div>${neighborList(q.neighborhood.side1)}</div>` +
      `<div>${neighborList(q.neighborhood.side2)}</div>` +
      `</div></div>`
    : "";
  return (
    `<div class="card" data-question-id="${esc(q.question_id)}">` +
    `<h2 class="pair"><span class="u1">${esc(q.u1)}</span>` +
    `<span class="vs">vs</span>` +
    `<span class="u2">${esc(q.u2)}</span></h2>` +
    `<table class="attributes">` +
    `<thead><tr><th></th><th>${esc(q.u1)}</th><th>${esc(q.u2)}</th>` +
    `</tr></thead><tbody>${rows}</tbody></table>` +
    context +
    `</div>`
  );
}

export function renderProgress(session: SessionInfo,
                               progress: Progress | null): string {
  const parts = [
    `<span>loop ${session.loop}</span>`,
    `<span>${session.asked} asked</span>`,
    `<span>${session.resolved} resolved</span>`,
    `<span>${session.remaining} remaining</span>`,
  ];
  if (session.budget !== null) {
    parts.push(`<span>budget ${session.budget}</span>`);
  }
  if (progress !== null && progress.f1 !== null) {
    parts.push(`<span>F1 ${progress.f1.toFixed(3)}</span>`);
  }
  return `<div class="progress">${parts.join(" · ")}</div>`;
}

export function renderWaiting(): string {
  return (
    `<div class="waiting"><p>No questions for you right now.</p>` +
    `<p class="hint">Waiting for the next batch…</p></div>`
  );
}

export function renderDone(answered: number): string {
  return (
    `<div class="done"><h2>Session complete</h2>` +
    `<p>You answered ${answered} question${answered === 1 ? "" : "s"}. ` +
    `Thank you!</p></div>`
  );
}
