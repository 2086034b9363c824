import type {
  CollectionStatus,
  ComparisonReport,
  FailurePage,
  MetricReport,
  PropertyDefinition,
  RunConfigurationBody,
} from "./types";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

/** Thin client over the documented endpoints; no other paths are used. */
export class ApiClient {
  constructor(private baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    const body = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, body.code ?? "error", body.message ?? "request failed");
    }
    return body as T;
  }

  getProperties(): Promise<PropertyDefinition[]> {
    return this.request("/properties");
  }

  createProject(name: string): Promise<{ id: string; name: string }> {
    return this.request("/projects", { method: "POST", body: JSON.stringify({ name }) });
  }

  createConfig(subjectId: string, body: RunConfigurationBody): Promise<{ id: string }> {
    return this.request(`/subjects/${subjectId}/configs`, {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  executeRun(configId: string): Promise<{ collection_id: string }> {
    return this.request(`/configs/${configId}/run`, { method: "POST", body: "{}" });
  }

  getStatus(collectionId: string): Promise<CollectionStatus> {
    return this.request(`/collections/${collectionId}/status`);
  }

  getMetrics(runId: string): Promise<MetricReport> {
    return this.request(`/runs/${runId}/metrics`);
  }

  getFailures(runId: string, offset: number, limit: number): Promise<FailurePage> {
    return this.request(`/runs/${runId}/failures?offset=${offset}&limit=${limit}`);
  }

  compare(projectId: string, collectionIds: string[]): Promise<ComparisonReport> {
    return this.request(
      `/projects/${projectId}/compare?collections=${collectionIds.join(",")}`,
    );
  }

  cancel(collectionId: string): Promise<{ state: string }> {
    return this.request(`/collections/${collectionId}`, { method: "DELETE" });
  }
}
