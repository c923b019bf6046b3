/**
 * Portal entry point: login with browser geolocation, ballot entry
 * with follow-up willingness-to-pay prompts, and a live dashboard fed
 * by the event stream with 1 Hz polling as fallback.
 */

import { describeError, PortalApi, readSse, type StateSnapshot } from "./api.js";
import { BallotForm, LAMBDA_MAX, SETTINGS } from "./ballot.js";
import { DashboardStore, wholePoints } from "./dashboard.js";

const api = new PortalApi("");
const store = new DashboardStore();
const form = new BallotForm();

let zone = "";
let session: string | null = null;
let userId: string | null = null;
let streamAbort: AbortController | null = null;

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

function setBanner(text: string, kind: "error" | "info" | "" = ""): void {
  const banner = $("banner");
  banner.textContent = text;
  banner.className = kind;
  banner.style.display = text ? "block" : "none";
}

// -- login ------------------------------------------------------------------

function geolocate(): Promise<{ lat: number; lon: number }> {
  return new Promise((resolve, reject) => {
    if (!navigator.geolocation) {
      reject(new Error("geolocation unavailable in this browser"));
      return;
    }
    navigator.geolocation.getCurrentPosition(
      (pos) => resolve({ lat: pos.coords.latitude, lon: pos.coords.longitude }),
      (err) => reject(new Error(`geolocation denied: ${err.message}`)),
      { timeout: 10_000 },
    );
  });
}

async function doLogin(): Promise<void> {
  try {
    zone = $<HTMLInputElement>("zone").value.trim();
    const user = $<HTMLInputElement>("user").value.trim();
    const token = $<HTMLInputElement>("token").value.trim();
    const { lat, lon } = await geolocate();
    const result = await api.login(zone, user, token, lat, lon);
    session = result.session;
    userId = result.user_id;
    store.applySnapshot(result.state);
    if (result.state.your?.ballot) form.loadWire(result.state.your.ballot);
    setBanner("");
    $("login-panel").style.display = "none";
    $("portal-panel").style.display = "block";
    renderBallotForm();
    render();
    startStream();
    setInterval(refreshTick, 1000);
  } catch (err) {
    setBanner(describeError(err), "error");
  }
}

async function doLogout(): Promise<void> {
  if (session) {
    try {
      await api.logout(zone, session);
    } catch {
      /* session may already be gone; drop it locally regardless */
    }
  }
  session = null;
  streamAbort?.abort();
  $("portal-panel").style.display = "none";
  $("login-panel").style.display = "block";
}

// -- ballot -----------------------------------------------------------------

function renderBallotForm(): void {
  const choices = $("preferred-choices");
  choices.innerHTML = "";
  for (const s of SETTINGS) {
    const label = document.createElement("label");
    const radio = document.createElement("input");
    radio.type = "radio";
    radio.name = "preferred";
    radio.value = String(s.index);
    radio.checked = s.index === form.preferred;
    radio.addEventListener("change", () => {
      form.setPreferred(s.index);
      renderBallotForm();
    });
    label.append(radio, ` ${s.label} (${s.level_percent}%)`);
    choices.appendChild(label);
  }

  const prompts = $("pay-prompts");
  prompts.innerHTML = "";
  const preferredLabel = SETTINGS[form.preferred].label;
  for (const alt of form.alternatives()) {
    const altLabel = SETTINGS[alt].label;
    const row = document.createElement("div");
    row.className = "pay-row";
    const text = document.createElement("span");
    text.textContent =
      `How many points would you pay per hour to have ${preferredLabel} ` +
      `instead of ${altLabel}?`;
    const input = document.createElement("input");
    input.type = "number";
    input.min = "0";
    input.max = String(LAMBDA_MAX);
    input.value = String(form.payFor(alt));
    input.id = `pay-${alt}`;
    input.addEventListener("input", () => {
      form.setPay(alt, Number(input.value));
      input.value = String(form.payFor(alt)); // reflect clamping
    });
    row.append(text, input);
    prompts.appendChild(row);
  }
}

async function submitBallot(): Promise<void> {
  if (!session) return;
  try {
    const ack = await api.submitBallot(zone, session, form.toWire());
    setBanner(
      `Vote recorded. Lights: ${ack.label} (${ack.level_percent}%), ` +
        `your rate ${ack.your_rate_points_per_hour} pts/h.`,
      "info",
    );
  } catch (err) {
    setBanner(describeError(err), "error");
  }
}

// -- live dashboard -----------------------------------------------------------

function startStream(): void {
  streamAbort?.abort();
  streamAbort = new AbortController();
  const run = async (): Promise<void> => {
    try {
      store.noteConnected();
      await readSse(
        api.eventsUrl(zone),
        (msg) => {
          store.applyMessage(msg);
          render();
        },
        { signal: streamAbort!.signal },
      );
      store.noteDisconnect();
    } catch {
      store.noteDisconnect();
    }
    render();
    setTimeout(run, store.backoffMs());
  };
  void run();
}

async function refreshTick(): Promise<void> {
  // 1 Hz fallback: poll whenever the stream is not live, and repaint
  // the staleness indicator either way.
  if (store.status !== "live" && session) {
    try {
      store.applySnapshot(await api.fetchState(zone, session));
      store.notePolling();
    } catch {
      store.noteDisconnect();
    }
  } else if (session && store.isStale()) {
    try {
      store.applySnapshot(await api.fetchState(zone, session));
    } catch {
      store.noteDisconnect();
    }
  }
  render();
}

function render(): void {
  const s: StateSnapshot | null = store.state;
  if (!s) return;
  $("setting").textContent = s.setting
    ? `${s.setting.label} at ${s.setting.level_percent}% illumination`
    : "manual switches (outside work hours)";
  const mine = userId ? (s.points_milli[userId] ?? 0) : 0;
  $("my-points").textContent = String(wholePoints(mine));
  $("my-rate").textContent = String(userId ? (s.rates_points_per_hour[userId] ?? 0) : 0);
  $("communal-points").textContent = String(wholePoints(s.communal_milli));
  const lot = s.thresholds.lottery;
  const lunch = s.thresholds.communal_lunch;
  $<HTMLProgressElement>("lottery-progress").value = lot.progress_milli / lot.threshold_milli;
  $<HTMLProgressElement>("lunch-progress").value =
    lunch.progress_milli / lunch.threshold_milli;
  $("occupants").textContent = s.occupants.join(", ") || "(nobody voting)";
  $("sensors").textContent = s.latest_sensor
    ? `${s.latest_sensor.temperature_degf.toFixed(1)} °F, ` +
      `${s.latest_sensor.humidity_percent.toFixed(0)}% RH, ` +
      `${s.latest_sensor.pressure_inhg.toFixed(2)} inHg, ` +
      `${s.latest_sensor.solar_radiation_w_m2.toFixed(0)} W/m²`
    : "no readings yet";
  $("staleness").textContent = store.isStale()
    ? `⚠ data is ${Math.round(store.ageMs() / 1000)}s old`
    : "";
  $("conn").textContent =
    store.status === "live" ? "live" : store.status === "polling" ? "polling" : "reconnecting…";
  for (const notice of store.takeNotices()) {
    const li = document.createElement("li");
    li.textContent = notice.text;
    $("notices").prepend(li);
  }
  $<HTMLButtonElement>("submit-ballot").disabled = !s.work_hours;
}

async function completeSurvey(): Promise<void> {
  if (!session) return;
  try {
    const result = await api.completeSurvey(zone, session);
    setBanner(
      `Thanks! Survey bonus credited; you now have ${wholePoints(result.your_points_milli)} points.`,
      "info",
    );
  } catch (err) {
    setBanner(describeError(err), "error");
  }
}

window.addEventListener("DOMContentLoaded", () => {
  $("login-button").addEventListener("click", () => void doLogin());
  $("logout-button").addEventListener("click", () => void doLogout());
  $("submit-ballot").addEventListener("click", () => void submitBallot());
  $("max-vote").addEventListener("click", () => {
    form.maxVote();
    renderBallotForm();
  });
  $("survey-button").addEventListener("click", () => void completeSurvey());
});
