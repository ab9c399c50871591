import { HttpServiceClient } from "./client.js";
import { ConsoleApp } from "./app.js";

const baseUrl = (window as { RXCHECK_BASE_URL?: string }).RXCHECK_BASE_URL
  ?? "http://127.0.0.1:8000";

const root = document.getElementById("app");
if (root) {
  const app = new ConsoleApp(new HttpServiceClient(baseUrl), root);
  void app.refreshHistory().then(() => app.render());
  app.render();
}
