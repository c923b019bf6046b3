/**
 * Typed client for the zone service.  Every number shown in the portal
 * comes from these endpoints; the UI never invents state.
 */

export interface Setting {
  index: number;
  label: string;
  level_percent: number;
}

export interface SensorReading {
  timestamp_ms: number;
  humidity_percent: number;
  temperature_degf: number;
  pressure_inhg: number;
  solar_radiation_w_m2: number;
}

export interface ThresholdProgress {
  threshold_milli: number;
  progress_milli: number;
  count: number;
}

export interface BallotWire {
  preferred: number;
  pay_vs: Record<string, number>;
}

export interface YourView {
  user_id: string;
  ballot: BallotWire | null;
  rate_points_per_hour: number;
  points_milli: number;
  logged_in: boolean;
}

export interface StateSnapshot {
  zone: string;
  timestamp_ms: number;
  work_hours: boolean;
  setting: Setting | null;
  occupants: string[];
  rates_points_per_hour: Record<string, number>;
  points_milli: Record<string, number>;
  communal_milli: number;
  thresholds: { lottery: ThresholdProgress; communal_lunch: ThresholdProgress };
  latest_sensor: SensorReading | null;
  actuator: { ok: boolean; seq: number; level_percent: number | null };
  recent_events: Array<Record<string, unknown>>;
  your: YourView | null;
}

export interface BallotAck {
  ok: boolean;
  outcome: number | null;
  label: string | null;
  level_percent: number | null;
  your_rate_points_per_hour: number;
  your_points_milli: number;
}

export interface LoginResult {
  session: string;
  user_id: string;
  state: StateSnapshot;
}

/** Server-sent message on /zones/{z}/events. */
export interface StreamMessage {
  type: string;
  zone: string;
  [key: string]: unknown;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

/** User-facing text for a failed call, with the why spelled out. */
export function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    switch (err.code) {
      case "PRESENCE_REQUIRED":
        return "Voting requires being in the office: your location is outside the zone.";
      case "OUTSIDE_WORK_HOURS":
        return "The lights are on manual switches outside work hours; come back at 9 AM.";
      case "INVALID_TOKEN":
        return "That user or access token is not on the roster.";
      case "STALE_SESSION":
        return "Your session ended; please log in again.";
      default:
        return `${err.code}: ${err.message}`;
    }
  }
  return err instanceof Error ? err.message : String(err);
}

async function parseError(resp: Response): Promise<never> {
  let code = `HTTP_${resp.status}`;
  let message = resp.statusText;
  try {
    const body = (await resp.json()) as { error?: { code: string; message: string } };
    if (body.error) {
      code = body.error.code;
      message = body.error.message;
    } else {
      message = JSON.stringify(body);
    }
  } catch {
    /* non-JSON error body: keep the status text */
  }
  throw new ApiError(resp.status, code, message);
}

export class PortalApi {
  constructor(
    private baseUrl: string,
    private fetchFn: typeof fetch = fetch,
  ) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) await parseError(resp);
    return (await resp.json()) as T;
  }

  async login(
    zone: string,
    userId: string,
    token: string,
    lat: number,
    lon: number,
  ): Promise<LoginResult> {
    return this.post(`/zones/${zone}/login`, { user_id: userId, token, lat, lon });
  }

  async logout(zone: string, session: string): Promise<void> {
    await this.post(`/zones/${zone}/logout`, { session });
  }

  async submitBallot(zone: string, session: string, ballot: BallotWire): Promise<BallotAck> {
    return this.post(`/zones/${zone}/ballot`, { session, ballot });
  }

  async completeSurvey(zone: string, session: string): Promise<{ your_points_milli: number }> {
    return this.post(`/zones/${zone}/survey`, { session });
  }

  async fetchState(zone: string, session?: string): Promise<StateSnapshot> {
    const query = session ? `?session=${encodeURIComponent(session)}` : "";
    const resp = await this.fetchFn(`${this.baseUrl}/zones/${zone}/state${query}`);
    if (!resp.ok) await parseError(resp);
    return (await resp.json()) as StateSnapshot;
  }

  eventsUrl(zone: string, maxEvents = 0): string {
    const query = maxEvents > 0 ? `?max_events=${maxEvents}` : "";
    return `${this.baseUrl}/zones/${zone}/events${query}`;
  }
}

/**
 * Minimal SSE reader over fetch streaming.  One implementation serves
 * both the browser portal and node-side tests; resolves when the
 * server closes the stream, rejects on transport errors.
 */
export async function readSse(
  url: string,
  onMessage: (msg: StreamMessage) => void,
  options: { signal?: AbortSignal; fetchFn?: typeof fetch } = {},
): Promise<void> {
  const fetchFn = options.fetchFn ?? fetch;
  const resp = await fetchFn(url, {
    headers: { Accept: "text/event-stream" },
    signal: options.signal,
  });
  if (!resp.ok || resp.body === null) {
    throw new ApiError(resp.status, `HTTP_${resp.status}`, "event stream unavailable");
  }
  const reader = resp.body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  for (;;) {
    const { done, value } = await reader.read();
    if (done) return;
    buffer += decoder.decode(value, { stream: true });
    let idx;
    while ((idx = buffer.indexOf("\n\n")) >= 0) {
      const frame = buffer.slice(0, idx);
      buffer = buffer.slice(idx + 2);
      for (const line of frame.split("\n")) {
        if (line.startsWith("data: ")) {
          onMessage(JSON.parse(line.slice(6)) as StreamMessage);
        }
      }
    }
  }
}
