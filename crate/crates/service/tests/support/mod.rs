//! Running servers and the reading scenario driven over HTTP. Expects the
//! shared core fixtures at `crate::common`.
#![allow(dead_code)]

use std::net::SocketAddr;

use xannot_core::*;
use xannot_service::api::{CreateLink, CreateResource, CreateSelector};
use xannot_service::{spawn, Client, ServerHandle};

use crate::common::*;

pub fn start(annotator: Annotator) -> (ServerHandle, Client) {
    let server = spawn(annotator, SocketAddr::from(([127, 0, 0, 1], 0))).expect("server starts");
    let client = Client::new(server.base_url());
    (server, client)
}

pub fn resource(c: &Client, kind: &str, locator: &str, title: Option<&str>, media_type: Option<&str>) -> Resource {
    let req = CreateResource {
        kind: kind.into(),
        locator: (kind != "comment").then(|| locator.into()),
        comment_body: (kind == "comment").then(|| locator.into()),
        title: title.map(Into::into),
        media_type: media_type.map(Into::into),
    };
    c.create_resource(&req).unwrap().0
}

pub fn selector(c: &Client, resource_id: EntityId, payload: SelectorPayload) -> Selector {
    c.create_selector(&CreateSelector { resource_id, payload }).unwrap()
}

pub fn link(
    c: &Client,
    sources: Vec<Endpoint>,
    targets: Vec<Endpoint>,
    class: Option<AnnotationClass>,
    formality: Option<Formality>,
) -> Link {
    c.create_link(&CreateLink { sources, targets, annotation_class: class, formality }).unwrap()
}

/// Same calls, same order as [`build_scenario`], sent over HTTP.
pub fn http_scenario(c: &Client) -> Scenario {
    let doc = resource(c, "pdf_document", MAIN_PDF, Some("As We May Think"), None);
    let ext = resource(c, "pdf_document", EXTERNAL_PDF, None, None);
    let page = resource(c, "web_page", WEB_PAGE, None, None);
    let video = resource(c, "video", VIDEO, None, Some("video/mp4"));

    let highlight = selector(c, doc.id, text_span(0, 10, "As We May Think", "Article: ", " by Vannevar"));
    let second = selector(c, doc.id, text_span(1, 120, "memex", "a device called a ", " in which"));

    let mut links = Vec::new();
    let mut target_selectors = Vec::new();
    let mut drop_on = |src: EntityId, resource: EntityId, payload: SelectorPayload| {
        let t = selector(c, resource, payload);
        target_selectors.push(t.id);
        links.push(link(c, vec![Endpoint::Selector(src)], vec![Endpoint::Selector(t.id)], None, None).id);
    };
    drop_on(highlight.id, ext.id, region(2, 0.1, 0.2, 0.5, 0.3));
    drop_on(highlight.id, ext.id, text_span(0, 0, "The Memex", "", " is"));
    drop_on(second.id, page.id, web("Consider a future device for individual use.", Some("/html[1]/body[1]/p[3]")));
    drop_on(second.id, video.id, segment(30_000, 65_000));

    let comment = resource(c, "comment", COMMENT, None, None);
    let l = link(
        c,
        vec![Endpoint::Selector(highlight.id)],
        vec![Endpoint::Resource(comment.id)],
        Some(AnnotationClass::Comment),
        Some(Formality::Informal),
    );
    links.push(l.id);

    Scenario {
        document: doc.id,
        highlight: highlight.id,
        second_highlight: second.id,
        comment: comment.id,
        links,
        target_selectors,
        target_resources: vec![ext.id, page.id, video.id, comment.id],
    }
}
