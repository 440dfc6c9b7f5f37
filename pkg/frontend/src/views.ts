import { ApiClient, ApiError, plaintextFromHex, type LoginResult } from "./api.js";
import { activitySvg, barChartSvg, progressPercent, shareSegments } from "./charts.js";
import { clear, el, fmtHps, fmtTime } from "./dom.js";
import { JobLiveModel, ReconnectingFeed } from "./live.js";
import type { JobStats, UiEvent, UserStats } from "./types.js";
import { parseHashLines, validateJobForm } from "./validate.js";

export interface Shell {
  api: ApiClient;
  role: string;
  username: string;
  navigate(hash: string): void;
  wsUrl(jobId: string): string;
}

function errorBanner(message: string): HTMLElement {
  return el("div", { class: "error-banner" }, [message]);
}

function statusPill(status: string): HTMLElement {
  return el("span", { class: `pill pill-${status}` }, [status]);
}

// ---------------------------------------------------------------------------
// login

export function renderLogin(root: HTMLElement, api: ApiClient,
                            onLogin: (result: LoginResult) => void): void {
  clear(root);
  const user = el("input", { placeholder: "username", autocomplete: "username" });
  const pass = el("input", { placeholder: "password", type: "password" });
  const message = el("div", { class: "form-error" });
  const button = el("button", { class: "primary" }, ["Sign in"]);
  const form = el("form", { class: "login-card" }, [
    el("h1", {}, ["hashfleet"]),
    el("p", { class: "muted" }, ["distributed password analysis"]),
    user, pass, button, message,
  ]);
  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    message.textContent = "";
    try {
      onLogin(await api.login(user.value, pass.value));
    } catch (err) {
      message.textContent = err instanceof ApiError ? err.message : String(err);
    }
  });
  root.append(form);
}

// ---------------------------------------------------------------------------
// job list

export async function renderJobs(root: HTMLElement, shell: Shell): Promise<void> {
  clear(root);
  const jobs = await shell.api.jobs();
  const table = el("table", { class: "data" });
  table.append(el("tr", {}, ["job", "status", "algorithm", "mode", "recovered", "created"]
    .map((h) => el("th", {}, [h]))));
  for (const job of jobs.slice().reverse()) {
    const link = el("a", { href: `#/jobs/${job.job_id}` }, [job.job_id]);
    const row = el("tr", {}, [
      el("td", {}, [link]),
      el("td", {}, [statusPill(job.status)]),
      el("td", {}, [job.algorithm]),
      el("td", {}, [job.mode]),
      el("td", {}, [`${job.cracked_count}/${job.total_hashes}`]),
      el("td", {}, [fmtTime(job.created_at)]),
    ]);
    table.append(row);
  }
  root.append(
    el("div", { class: "toolbar" }, [
      el("h2", {}, ["Jobs"]),
      el("a", { href: "#/new", class: "button primary" }, ["New job"]),
    ]),
    jobs.length ? table : el("p", { class: "muted" }, ["No jobs yet."]),
  );
}

// ---------------------------------------------------------------------------
// new job

export async function renderNewJob(root: HTMLElement, shell: Shell): Promise<void> {
  clear(root);
  const [nodes, wordlists] = await Promise.all([shell.api.nodes(), shell.api.wordlists()]);

  const algorithm = el("select", {});
  for (const a of ["md5", "sha1", "sha256"]) algorithm.append(el("option", { value: a }, [a]));
  const mode = el("select", {});
  for (const m of ["dictionary", "brute", "rules", "combinator"]) {
    mode.append(el("option", { value: m }, [m]));
  }

  const nodePicker = el("div", { class: "node-picker" });
  const nodeBoxes: HTMLInputElement[] = [];
  for (const node of nodes) {
    const box = el("input", { type: "checkbox", value: node.node_id });
    nodeBoxes.push(box);
    const power = node.power[algorithm.value] ?? 0;
    const label = el("label", { class: "node-option" }, [
      box, ` ${node.agent_name} `, el("span", { class: "muted" },
        [`${node.os}/${node.arch} · ${fmtHps(power)}`]),
    ]);
    nodePicker.append(label);
  }
  if (nodes.length === 0) nodePicker.append(el("p", { class: "muted" }, ["No connected nodes."]));

  const wordlistPicker = el("select", { multiple: "multiple", size: "4" });
  const leftSelect = el("select", {});
  const rightSelect = el("select", {});
  for (const w of wordlists) {
    const text = `${w.id} (${w.line_count} lines)`;
    wordlistPicker.append(el("option", { value: w.id }, [text]));
    leftSelect.append(el("option", { value: w.id }, [text]));
    rightSelect.append(el("option", { value: w.id }, [text]));
  }

  const minLength = el("input", { type: "number", value: "1", min: "1", max: "6" });
  const maxLength = el("input", { type: "number", value: "3", min: "1", max: "6" });
  const rulesBox = el("textarea", { rows: "3", placeholder: "one rule per line, e.g. c$1" });
  const hashesBox = el("textarea", { rows: "8", placeholder: "one hex digest per line" });
  const fileInput = el("input", { type: "file" });

  const bruteFields = el("div", { class: "mode-fields" }, [
    el("label", {}, ["min length ", minLength]), el("label", {}, ["max length ", maxLength])]);
  const dictFields = el("div", { class: "mode-fields" }, [
    el("label", {}, ["wordlists ", wordlistPicker])]);
  const ruleFields = el("div", { class: "mode-fields" }, [
    el("label", {}, ["rules ", rulesBox])]);
  const comboFields = el("div", { class: "mode-fields" }, [
    el("label", {}, ["left ", leftSelect]), el("label", {}, ["right ", rightSelect])]);

  function syncModeFields(): void {
    const m = mode.value;
    bruteFields.style.display = m === "brute" ? "" : "none";
    dictFields.style.display = m === "dictionary" || m === "rules" ? "" : "none";
    ruleFields.style.display = m === "rules" ? "" : "none";
    comboFields.style.display = m === "combinator" ? "" : "none";
  }
  mode.addEventListener("change", syncModeFields);
  syncModeFields();

  fileInput.addEventListener("change", async () => {
    const file = fileInput.files?.[0];
    if (file) hashesBox.value = await file.text();
  });

  const message = el("div", { class: "form-error" });
  const submit = el("button", { class: "primary" }, ["Submit job"]);
  const form = el("form", { class: "job-form" }, [
    el("h2", {}, ["New job"]),
    el("label", {}, ["algorithm ", algorithm]),
    el("label", {}, ["mode ", mode]),
    bruteFields, dictFields, ruleFields, comboFields,
    el("label", {}, ["nodes "]), nodePicker,
    el("label", {}, ["hashes ", hashesBox]),
    el("label", {}, ["or upload a hash file ", fileInput]),
    submit, message,
  ]);

  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    message.textContent = "";
    const selectedWordlists = Array.from(wordlistPicker.selectedOptions).map((o) => o.value);
    const values = {
      algorithm: algorithm.value,
      mode: mode.value,
      hashesText: hashesBox.value,
      nodeIds: nodeBoxes.filter((b) => b.checked).map((b) => b.value),
      minLength: Number(minLength.value),
      maxLength: Number(maxLength.value),
      wordlists: selectedWordlists,
      rules: rulesBox.value.split("\n").map((r) => r.trim()).filter(Boolean),
      left: leftSelect.value,
      right: rightSelect.value,
    };
    const errors = validateJobForm(values);
    if (errors.length > 0) {
      message.textContent = errors.map((e) => `${e.field}: ${e.message}`).join(" · ");
      return;
    }
    const hashes = parseHashLines(values.hashesText, values.algorithm) as string[];
    const modeSpec: Record<string, unknown> = { mode: values.mode };
    if (values.mode === "brute") {
      modeSpec.min_length = values.minLength;
      modeSpec.max_length = values.maxLength;
    } else if (values.mode === "combinator") {
      modeSpec.left = values.left;
      modeSpec.right = values.right;
    } else {
      modeSpec.wordlists = values.wordlists;
      if (values.mode === "rules") modeSpec.rules = values.rules;
    }
    try {
      const out = await shell.api.submitJob({
        algorithm: values.algorithm,
        mode: modeSpec as never,
        node_ids: values.nodeIds,
        hashes,
      });
      shell.navigate(`#/jobs/${out.job_id}`);
    } catch (err) {
      if (err instanceof ApiError) {
        message.textContent = err.field ? `${err.field}: ${err.message}` : err.message;
      } else {
        message.textContent = String(err);
      }
    }
  });
  root.append(form);
}

// ---------------------------------------------------------------------------
// job detail (live)

export async function renderJobDetail(root: HTMLElement, shell: Shell,
                                      jobId: string): Promise<() => void> {
  clear(root);
  const model = new JobLiveModel(jobId);
  const header = el("div", { class: "toolbar" });
  const feedState = el("span", { class: "feed-state" });
  const csvLink = el("a", { class: "button", href: shell.api.csvUrl(jobId) }, ["Download CSV"]);
  const progressWrap = el("div", { class: "progress-wrap" });
  const rowsTable = el("table", { class: "data" });
  const summary = el("p", { class: "muted" });
  root.append(header, summary, progressWrap,
              el("h3", {}, ["Recovered passwords"]), rowsTable);

  const renderedRows = new Set<string>();

  function redraw(): void {
    clear(header);
    header.append(
      el("h2", {}, [`Job ${jobId}`]), statusPill(model.status), feedState, csvLink);
    feedState.textContent = model.feed === "live" ? "" :
      model.feed === "reconnecting" ? "reconnecting…" : "";
    feedState.className = `feed-state ${model.feed}`;
    if (model.csvEnabled) {
      csvLink.removeAttribute("aria-disabled");
      csvLink.classList.remove("disabled");
    } else {
      csvLink.setAttribute("aria-disabled", "true");
      csvLink.classList.add("disabled");
    }
    summary.textContent =
      `${model.crackedCount} of ${model.totalHashes} hashes recovered` +
      (model.partialResults ? " (partial: some work was not completed)" : "");

    clear(progressWrap);
    const job = model.job;
    for (const [nodeId, p] of Object.entries(model.nodeProgress)) {
      const total = job ? guessNodeWork(job, model.totalHashes) : 0;
      const pct = progressPercent(p.tried, total);
      progressWrap.append(el("div", { class: "progress-row" }, [
        el("span", { class: "progress-label" }, [`${nodeId} · ${fmtHps(p.speed_hps)}`]),
        el("div", { class: "progress-track" }, [
          el("div", { class: "progress-fill", style: `width:${pct.toFixed(1)}%` }, []),
        ]),
        el("span", { class: "muted" }, [`${p.tried.toLocaleString()} tried`]),
      ]));
    }

    if (renderedRows.size === 0) {
      clear(rowsTable);
      rowsTable.append(el("tr", {}, ["hash", "plaintext", "node", "at"]
        .map((h) => el("th", {}, [h]))));
    }
    for (const row of model.rows) {
      if (renderedRows.has(row.hash)) continue;
      renderedRows.add(row.hash);
      rowsTable.append(el("tr", {}, [
        el("td", { class: "mono" }, [row.hash]),
        el("td", { class: "mono" }, [plaintextFromHex(row.plaintext_hex)]),
        el("td", {}, [row.node_id]),
        el("td", {}, [fmtTime(row.at)]),
      ]));
    }
  }

  async function hydrate(): Promise<void> {
    const [job, results] = await Promise.all([
      shell.api.job(jobId), shell.api.results(jobId)]);
    model.hydrate(job, results);
    renderedRows.clear();
    clear(rowsTable);
    redraw();
  }

  const feed = new ReconnectingFeed(
    () => new WebSocket(shell.wsUrl(jobId)) as unknown as import("./live.js").SocketLike,
    {
      onEvent: (event: UiEvent) => {
        if (model.applyEvent(event)) redraw();
        if (model.terminal && event.type === "status") feed.stop();
      },
      onConnect: () => { void hydrate(); },
      onState: (state) => { model.feed = state; redraw(); },
    },
  );

  await hydrate();
  if (!model.terminal) feed.start();
  return () => feed.stop();
}

function guessNodeWork(job: JobStats, totalHashes: number): number {
  // Rough denominator for progress bars; exact per-node totals are not
  // exposed, so scale by mode: wordlist candidates or keyspace share.
  if (job.mode === "brute") return 95 ** 3;
  return Math.max(totalHashes, 1) * 1000;
}

// ---------------------------------------------------------------------------
// profile (user statistics)

export async function renderProfile(root: HTMLElement, shell: Shell): Promise<void> {
  clear(root);
  const stats = await shell.api.myStats();
  root.append(
    el("h2", {}, [`Profile · ${shell.username}`]),
    statsBlock(stats),
  );
}

function statsBlock(stats: UserStats): HTMLElement {
  const totals = el("div", { class: "stat-cards" }, [
    card("total", stats.total_jobs), card("active", stats.active),
    card("completed", stats.completed), card("failed", stats.failed),
  ]);
  const modeChart = el("div", { class: "chart-block" });
  modeChart.innerHTML = `<h3>by mode</h3>${barChartSvg(shareSegments(stats.by_mode))}`;
  const algoChart = el("div", { class: "chart-block" });
  algoChart.innerHTML = `<h3>by algorithm</h3>${barChartSvg(shareSegments(stats.by_algorithm))}`;
  const activity = el("div", { class: "chart-block" });
  activity.innerHTML = `<h3>activity</h3>${activitySvg(stats.activity_by_day)}`;
  return el("div", {}, [totals, modeChart, algoChart, activity]);
}

function card(label: string, value: number): HTMLElement {
  return el("div", { class: "stat-card" }, [
    el("div", { class: "stat-value" }, [String(value)]),
    el("div", { class: "stat-label" }, [label]),
  ]);
}

// ---------------------------------------------------------------------------
// admin

export async function renderAdmin(root: HTMLElement, shell: Shell): Promise<void> {
  clear(root);
  let stats;
  try {
    stats = await shell.api.adminStats();
  } catch (err) {
    root.append(errorBanner(err instanceof ApiError ? err.message : String(err)));
    return;
  }
  const nodeTable = el("table", { class: "data" });
  nodeTable.append(el("tr", {}, ["node", "os/arch", "engine", "status", "power", "suspect"]
    .map((h) => el("th", {}, [h]))));
  for (const node of stats.nodes) {
    nodeTable.append(el("tr", {}, [
      el("td", {}, [node.agent_name]),
      el("td", {}, [`${node.os}/${node.arch}`]),
      el("td", {}, [node.engine]),
      el("td", {}, [node.connected ? statusPill("running") : statusPill("failed")]),
      el("td", {}, [Object.entries(node.power)
        .map(([a, v]) => `${a} ${fmtHps(v)}`).join(", ")]),
      el("td", {}, [String(node.suspect_count)]),
    ]));
  }
  root.append(
    el("h2", {}, ["Admin"]),
    el("p", { class: "muted" }, [`${stats.users} users registered`]),
    el("h3", {}, ["Nodes"]),
    stats.nodes.length ? nodeTable : el("p", { class: "muted" }, ["No nodes have registered."]),
    el("h3", {}, ["All jobs"]),
    statsBlock(stats.totals),
  );
}
