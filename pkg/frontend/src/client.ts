/** Typed wrapper around the validation service HTTP API. */

export interface ValidationResponse {
  request_id: string;
  score: number;
  valid: boolean;
  threshold: number;
  entities: {
    medications: string[];
    dosages: string[];
    usages: string[];
  };
  variant: string;
  normalized: { diagnosis: string; prescription: string };
  correction_of?: string;
}

export interface HistoryEntry {
  id: string;
  ts: number;
  type: "validation" | "correction";
  request: { diagnosis: string; prescription: string };
  response: ValidationResponse;
  correction_of: string | null;
}

export class ServiceError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

export interface ServiceClient {
  validate(diagnosis: string, prescription: string): Promise<ValidationResponse>;
  correct(
    diagnosis: string,
    prescription: string,
    correctionOf: string,
  ): Promise<ValidationResponse>;
  history(limit?: number): Promise<HistoryEntry[]>;
}

async function unwrap<T>(res: Response): Promise<T> {
  if (!res.ok) {
    let detail = res.statusText;
    try {
      detail = (await res.json()).detail ?? detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ServiceError(res.status, detail);
  }
  return res.json() as Promise<T>;
}

export class HttpServiceClient implements ServiceClient {
  constructor(private baseUrl: string) {}

  private post(path: string, body: unknown): Promise<Response> {
    return fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async validate(diagnosis: string, prescription: string): Promise<ValidationResponse> {
    return unwrap(await this.post("/v1/validate", { diagnosis, prescription }));
  }

  async correct(
    diagnosis: string,
    prescription: string,
    correctionOf: string,
  ): Promise<ValidationResponse> {
    return unwrap(
      await this.post("/v1/correction", {
        diagnosis,
        prescription,
        correction_of: correctionOf,
      }),
    );
  }

  async history(limit = 20): Promise<HistoryEntry[]> {
    return unwrap(await fetch(`${this.baseUrl}/v1/history?limit=${limit}`));
  }
}
