/** Browser entry point: wires the queue, renderers, and key bindings. */

import { Answer, ApiClient, Progress, SessionInfo, SubmitFailed }
  from "./api.js";
import { createSession } from "./queue.js";
import { renderDone, renderProgress, renderQuestionCard, renderWaiting }
  from "./render.js";

const QUESTION_POLL_MS = 1000;
const PROGRESS_POLL_MS = 2000;

function workerIdFromUrl(): string | null {
  const params = new URLSearchParams(window.location.search);
  const id = params.get("worker");
  return id !== null && id.trim() !== "" ? id.trim() : null;
}

function sessionFinished(info: SessionInfo): boolean {
  if (info.loop === 0) return false; // not started yet
  if (info.remaining === 0) return true;
  return info.budget !== null && info.asked >= info.budget;
}

export function startApp(root: HTMLElement): void {
  const workerId = workerIdFromUrl();
  if (workerId === null) {
    root.innerHTML =
      `<div class="error"><p>Missing worker id.</p>` +
      `<p class="hint">Open this page as <code>/?worker=YOURNAME</code>` +
      `.</p></div>`;
    return;
  }

  const api = new ApiClient();
  const session = createSession(api, workerId);
  const cardEl = document.createElement("div");
  cardEl.id = "question";
  const statusEl = document.createElement("div");
  statusEl.id = "status";
  const noticeEl = document.createElement("div");
  noticeEl.id = "notice";
  root.replaceChildren(statusEl, noticeEl, cardEl);

  let lastSession: SessionInfo | null = null;
  let lastProgress: Progress | null = null;
  let done = false;

  function showCurrent(): void {
    if (done) {
      cardEl.innerHTML = renderDone(session.answeredCount());
      return;
    }
    const q = session.current();
    if (q === null) {
      cardEl.innerHTML = renderWaiting();
      return;
    }
    cardEl.innerHTML =
      renderQuestionCard(q) +
      `<div class="buttons">` +
      `<button data-answer="match">Match <kbd>m</kbd></button>` +
      `<button data-answer="non_match">Non-match <kbd>n</kbd></button>` +
      `<button data-answer="unsure">Unsure <kbd>u</kbd></button>` +
      `</div>`;
    for (const btn of cardEl.querySelectorAll<HTMLButtonElement>(
        "button[data-answer]")) {
      btn.addEventListener("click", () => {
        void submit(btn.dataset["answer"] as Answer);
      });
    }
  }

  async function submit(answer: Answer): Promise<void> {
    if (done || session.busy() || session.current() === null) return;
    noticeEl.textContent = "";
    try {
      await session.answer(answer);
    } catch (err) {
      noticeEl.textContent = err instanceof SubmitFailed
        ? "Could not reach the server; your answer was not saved. Try again."
        : "Unexpected error; try again.";
      return;
    }
    if (session.current() === null) await pollQuestions();
    showCurrent();
  }

  async function pollQuestions(): Promise<void> {
    if (done) return;
    try {
      await session.refill();
    } catch {
      return; // transient; the next tick retries
    }
  }

  async function pollStatus(): Promise<void> {
    try {
      lastSession = await api.session();
      lastProgress = await api.progress();
    } catch {
      return;
    }
    statusEl.innerHTML = renderProgress(lastSession, lastProgress);
    if (!done && sessionFinished(lastSession) && session.current() === null) {
      done = true;
      showCurrent();
    }
  }

  document.addEventListener("keydown", (ev) => {
    const key = ev.key.toLowerCase();
    const answer = key === "m" ? "match"
      : key === "n" ? "non_match"
      : key === "u" ? "unsure"
      : null;
    if (answer !== null) void submit(answer);
  });

  showCurrent();
  void pollQuestions().then(showCurrent);
  void pollStatus();
  setInterval(() => {
    void pollQuestions().then(() => {
      if (!done && session.current() !== null) {
        const el = cardEl.querySelector(".card");
        if (el === null) showCurrent();
      }
    });
  }, QUESTION_POLL_MS);
  setInterval(() => void pollStatus(), PROGRESS_POLL_MS);
}

const rootEl = document.getElementById("app");
if (rootEl !== null) startApp(rootEl);
